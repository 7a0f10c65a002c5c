#pragma once

#include <optional>
#include <span>
#include <string>

#include "emvqm/evaluation.hpp"

namespace emvqm::cli {

// Standalone SVG: axes with ticks, one dot per (predicted, dmos) point and,
// when given, the logistic curve over the predicted range.
std::string scatter_svg(std::span<const double> predicted, std::span<const double> dmos,
                        const std::optional<LogisticFit>& curve);

}  // namespace emvqm::cli
