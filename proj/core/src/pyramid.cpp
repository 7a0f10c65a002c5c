#include "emvqm/pyramid.hpp"

#include <opencv2/imgproc.hpp>

#include "emvqm/error.hpp"

namespace emvqm {

std::vector<cv::Size> pyramid_sizes(cv::Size base, int count, double factor) {
  if (count < 1) throw ConfigError("pyramid needs at least one level");
  if (!(factor > 0.0 && factor < 1.0)) throw ConfigError("pyramid factor must be in (0, 1)");
  if (base.width < kMinPyramidSide || base.height < kMinPyramidSide) throw DataError("frame too small");
  std::vector<cv::Size> out{base};
  while (static_cast<int>(out.size()) < count) {
    const cv::Size& s = out.back();
    const cv::Size next(static_cast<int>(std::lround(s.width * factor)), static_cast<int>(std::lround(s.height * factor)));
    if (next.width < kMinPyramidSide || next.height < kMinPyramidSide) break;
    out.push_back(next);
  }
  return out;
}

Pyramid build_pyramid(const cv::Mat& frame, int count, double factor) {
  if (frame.empty() || frame.channels() != 1) throw DataError("pyramid needs a single-channel frame");
  const auto sizes = pyramid_sizes(frame.size(), count, factor);
  Pyramid p;
  p.factor = factor;
  cv::Mat base;
  frame.convertTo(base, CV_32F);
  p.levels.push_back(base);
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    cv::Mat blurred, next;
    cv::GaussianBlur(p.levels.back(), blurred, cv::Size(0, 0), 1.0, 1.0, cv::BORDER_REFLECT_101);
    cv::resize(blurred, next, sizes[i], 0, 0, cv::INTER_LINEAR);
    p.levels.push_back(next);
  }
  return p;
}

}  // namespace emvqm
