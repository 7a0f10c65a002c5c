#pragma once

#include <span>
#include <vector>

namespace emvqm {

struct SvrParams {
  double c = 1.0;
  double epsilon = 0.1;
  double tolerance = 1e-6;  // relative duality gap
  int max_epochs = 10000;

  void validate() const;
};

// Linear epsilon-insensitive regressor on min-max scaled features.
struct SvrModel {
  std::vector<double> weights;
  double bias = 0.0;
  double c = 1.0;
  double epsilon = 0.1;
  std::vector<double> scale_min;
  std::vector<double> scale_max;

  std::size_t dimension() const { return weights.size(); }
};

using FeatureRows = std::span<const std::vector<double>>;

// Solves the dual by cyclic coordinate descent. Identical (x, y) samples count
// once, so duplicating the training set leaves the model unchanged. When
// `trace` is given it receives the dual objective after every epoch.
SvrModel svr_train(FeatureRows features, std::span<const double> targets, const SvrParams& params = {},
                   std::vector<double>* trace = nullptr);

double svr_predict(const SvrModel& model, std::span<const double> features);

struct SvrGrid {
  std::vector<double> c{0.1, 1.0, 10.0};
  std::vector<double> epsilon{0.01, 0.1};
  int folds = 5;
};

// Picks (C, epsilon) by k-fold CV on the given rows only (contiguous folds,
// lowest RMSE, first candidate wins ties).
SvrParams select_svr_params(FeatureRows features, std::span<const double> targets, const SvrGrid& grid = {},
                            const SvrParams& base = {});

}  // namespace emvqm
