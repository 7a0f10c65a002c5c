#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <opencv2/core/mat.hpp>

#include "emvqm/curve.hpp"

namespace emvqm {

struct Keypoint {
  Point2 position;  // pixels, x = column
  double scale = 0.0;
  double response = 0.0;  // |det H| of the box-filter Hessian
  std::array<double, 64> descriptor{};
};

struct KeypointConfig {
  // Responses below relative_threshold * (frame-wide max) are discarded.
  double relative_threshold = 0.001;
  // Absolute floor on |det H| (intensities normalised to [0, 1]).
  double min_response = 1e-9;
  int octaves = 4;
};

struct MatchConfig {
  double ratio = 0.7;
  double max_disparity = 64.0;
};

struct KeypointMatch {
  std::size_t ref = 0;
  std::size_t syn = 0;
};

// Determinant-of-Hessian blob/saddle detector on an integral-image box-filter
// scale stack (4 intervals per octave), 3x3x3 non-maximum suppression on
// |det H|, and an upright 4x4-cell Haar gradient-sum descriptor (64-D, unit
// L2 norm). Frames are 8-bit grayscale, at least 64x64.
std::vector<Keypoint> detect_keypoints(const cv::Mat& frame, const KeypointConfig& config = {});

// Nearest-neighbour descriptor matching restricted to candidates within
// max_disparity, with Lowe's ratio test and a mutual-best check. The result
// is one-to-one and sorted by ref index.
std::vector<KeypointMatch> match_keypoints(std::span<const Keypoint> ref, std::span<const Keypoint> syn,
                                           const MatchConfig& config = {});

}  // namespace emvqm
