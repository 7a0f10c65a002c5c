#pragma once

#include <cmath>
#include <vector>

#include <opencv2/core.hpp>

namespace emvqm {

constexpr int kMinPyramidSide = 32;
constexpr int kPyramidLevels = 7;
inline const double kPyramidFactor = 1.0 / std::sqrt(2.0);

struct Pyramid {
  std::vector<cv::Mat> levels;  // CV_32F, level 0 is the input
  double factor = kPyramidFactor;

  std::size_t count() const { return levels.size(); }
};

// Level sizes without building the images. Stops before a level would fall
// below kMinPyramidSide in either dimension.
std::vector<cv::Size> pyramid_sizes(cv::Size base, int count = kPyramidLevels, double factor = kPyramidFactor);

// Each level is the previous one blurred with sigma 1 and resampled
// bilinearly by factor.
Pyramid build_pyramid(const cv::Mat& frame, int count = kPyramidLevels, double factor = kPyramidFactor);

}  // namespace emvqm
