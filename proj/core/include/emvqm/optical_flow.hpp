#pragma once

#include <filesystem>
#include <functional>

#include <opencv2/core.hpp>

#include "emvqm/curve.hpp"

namespace emvqm {

// Dense displacement from one frame to the next: prev(p) ~ next(p + (u, v)).
struct FlowField {
  cv::Mat u;  // CV_32F
  cv::Mat v;  // CV_32F

  cv::Size size() const { return u.size(); }
  Point2 at(int x, int y) const { return {u.at<float>(y, x), v.at<float>(y, x)}; }

  static FlowField zeros(cv::Size size);
  static FlowField constant(cv::Size size, Point2 d);
};

struct FlowConfig {
  int levels = 5;          // coarse-to-fine levels, factor 0.5
  int warps = 5;           // linearisations per level
  double window_sigma = 4.0;
  double regularization = 1.0;
  double max_flow = 32.0;

  void validate() const;
};

// Pyramidal Lucas-Kanade style estimate with a 3x3 median on (u, v) after
// every level. Components are clamped to [-max_flow, max_flow].
FlowField compute_flow(const cv::Mat& prev, const cv::Mat& next, const FlowConfig& cfg = {});

// Resizes a flow field and scales its vectors to the new resolution.
FlowField rescale_flow(const FlowField& flow, cv::Size size);

// Supplies the flow from frame t to t + 1 at the resolution of the given
// pyramid level images.
class FlowSource {
 public:
  virtual ~FlowSource() = default;
  virtual FlowField flow(int frame, const cv::Mat& prev, const cv::Mat& next) const = 0;
};

class ComputedFlow : public FlowSource {
 public:
  explicit ComputedFlow(FlowConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }
  FlowField flow(int frame, const cv::Mat& prev, const cv::Mat& next) const override;

 private:
  FlowConfig cfg_;
};

// Full-resolution flow provided from outside (a file set or memory); coarser
// levels receive a rescaled copy.
class InjectedFlow : public FlowSource {
 public:
  using Loader = std::function<FlowField(int frame)>;
  explicit InjectedFlow(Loader loader) : loader_(std::move(loader)) {}
  FlowField flow(int frame, const cv::Mat& prev, const cv::Mat& next) const override;

 private:
  Loader loader_;
};

// Binary flow file: "EMVQMFLO", u32 width, u32 height (little endian), then
// the row-major float32 u plane followed by the v plane.
void write_flow_file(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flow_file(const std::filesystem::path& path);

// <dir>/<frame:05d>.flo
std::filesystem::path flow_file_name(const std::filesystem::path& dir, int frame);
InjectedFlow::Loader flow_directory(std::filesystem::path dir);

}  // namespace emvqm
