#include "emvqm/descriptors.hpp"

#include <cmath>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "emvqm/error.hpp"

namespace emvqm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void vote(double angle, double weight, int bins, int& b0, float& w0, float& w1) {
  double pos = angle / kTwoPi * bins;
  pos -= bins * std::floor(pos / bins);
  int b = static_cast<int>(std::floor(pos));
  const double frac = pos - b;
  if (b >= bins) b -= bins;
  b0 = b;
  w0 = static_cast<float>(weight * (1.0 - frac));
  w1 = static_cast<float>(weight * frac);
}

OrientationField from_vectors(const cv::Mat& gx, const cv::Mat& gy, int bins, double zero) {
  OrientationField f{cv::Mat(gx.size(), CV_32S), cv::Mat(gx.size(), CV_32F), cv::Mat(gx.size(), CV_32F)};
  for (int r = 0; r < gx.rows; ++r) {
    const float* px = gx.ptr<float>(r);
    const float* py = gy.ptr<float>(r);
    int* b = f.b0.ptr<int>(r);
    float* w0 = f.w0.ptr<float>(r);
    float* w1 = f.w1.ptr<float>(r);
    for (int c = 0; c < gx.cols; ++c) {
      const double mag = std::hypot(px[c], py[c]);
      if (zero >= 0.0 && mag < zero) {
        b[c] = bins;
        w0[c] = 1.0f;
        w1[c] = 0.0f;
      } else if (mag == 0.0) {
        b[c] = 0;
        w0[c] = w1[c] = 0.0f;
      } else {
        vote(std::atan2(py[c], px[c]), mag, bins, b[c], w0[c], w1[c]);
      }
    }
  }
  return f;
}

}  // namespace

const char* to_string(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::hog:
      return "hog";
    case DescriptorKind::hof:
      return "hof";
    case DescriptorKind::mbhx:
      return "mbhx";
    case DescriptorKind::mbhy:
      return "mbhy";
  }
  return "?";
}

void DescriptorConfig::validate() const {
  if (volume < 2) throw ConfigError("descriptor volume must be at least 2 px");
  if (cells_xy < 1 || cells_t < 1) throw ConfigError("descriptor cell counts must be positive");
  if (volume % cells_xy != 0) throw ConfigError("descriptor volume must divide into cells");
  if (bins < 2) throw ConfigError("descriptor needs at least 2 bins");
  if (!(zero_flow >= 0.0)) throw ConfigError("zero-flow threshold must be non-negative");
}

OrientationField gradient_orientations(const cv::Mat& plane, int bins) {
  cv::Mat f;
  plane.convertTo(f, CV_32F);
  const cv::Mat k = (cv::Mat_<float>(1, 3) << -0.5f, 0.0f, 0.5f);
  cv::Mat gx, gy;
  cv::filter2D(f, gx, CV_32F, k, cv::Point(-1, -1), 0.0, cv::BORDER_REPLICATE);
  cv::filter2D(f, gy, CV_32F, k.t(), cv::Point(-1, -1), 0.0, cv::BORDER_REPLICATE);
  return from_vectors(gx, gy, bins, -1.0);
}

OrientationField flow_orientations(const FlowField& flow, int bins, double zero_flow) {
  return from_vectors(flow.u, flow.v, bins, zero_flow);
}

std::vector<double> volume_histogram(std::span<const OrientationField> frames, std::span<const Point2> centers,
                                     int bins_per_cell, const DescriptorConfig& cfg) {
  cfg.validate();
  if (frames.size() != centers.size() || frames.empty()) throw DataError("volume needs one center per frame");
  const int n = cfg.volume, cell = n / cfg.cells_xy, len = static_cast<int>(frames.size());
  const int nb = bins_per_cell;
  std::vector<double> h(static_cast<std::size_t>(cfg.cells()) * nb, 0.0);
  for (int i = 0; i < len; ++i) {
    const OrientationField& f = frames[i];
    const int ct = i * cfg.cells_t / len;
    const int x0 = static_cast<int>(std::lround(centers[i].x)) - n / 2;
    const int y0 = static_cast<int>(std::lround(centers[i].y)) - n / 2;
    for (int dy = 0; dy < n; ++dy) {
      const int y = y0 + dy;
      if (y < 0 || y >= f.b0.rows) continue;
      const int* b = f.b0.ptr<int>(y);
      const float* w0 = f.w0.ptr<float>(y);
      const float* w1 = f.w1.ptr<float>(y);
      for (int dx = 0; dx < n; ++dx) {
        const int x = x0 + dx;
        if (x < 0 || x >= f.b0.cols) continue;
        const int c = (ct * cfg.cells_xy + dy / cell) * cfg.cells_xy + dx / cell;
        double* hc = &h[static_cast<std::size_t>(c) * nb];
        const int b0 = b[x];
        if (b0 >= cfg.bins) {
          hc[b0] += w0[x];
        } else {
          hc[b0] += w0[x];
          hc[(b0 + 1) % cfg.bins] += w1[x];
        }
      }
    }
  }
  double norm = 0.0;
  for (double v : h) norm += v * v;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : h) v /= norm;
  }
  return h;
}

const std::vector<double>& TrajectoryDescriptors::operator[](DescriptorKind k) const {
  switch (k) {
    case DescriptorKind::hog:
      return hog;
    case DescriptorKind::hof:
      return hof;
    case DescriptorKind::mbhx:
      return mbhx;
    case DescriptorKind::mbhy:
      break;
  }
  return mbhy;
}

DescriptorExtractor::DescriptorExtractor(const ScaleTracks& tracks, const DescriptorConfig& cfg, int length)
    : cfg_(cfg), length_(length) {
  cfg_.validate();
  if (tracks.flows.empty() || tracks.frames.size() != tracks.flows.size() + 1)
    throw DataError("tracks need one flow per frame pair");
  for (std::size_t t = 0; t < tracks.frames.size(); ++t) {
    // The last frame has no forward flow and reuses the previous one.
    const FlowField& fl = tracks.flows[std::min(t, tracks.flows.size() - 1)];
    hog_.push_back(gradient_orientations(tracks.frames[t], cfg_.bins));
    hof_.push_back(flow_orientations(fl, cfg_.bins, cfg_.zero_flow));
    mbhx_.push_back(gradient_orientations(fl.u, cfg_.bins));
    mbhy_.push_back(gradient_orientations(fl.v, cfg_.bins));
  }
}

TrajectoryDescriptors DescriptorExtractor::describe(const Trajectory& t) const {
  if (!t.complete(length_)) throw DataError("incomplete trajectory");
  const std::size_t s = static_cast<std::size_t>(t.start_frame);
  if (t.start_frame < 0 || s + t.points.size() > hog_.size()) throw DataError("trajectory outside the video");
  const std::span<const Point2> c(t.points);
  const std::size_t len = t.points.size();
  TrajectoryDescriptors d;
  d.hog = volume_histogram(std::span(hog_).subspan(s, len), c, cfg_.bins, cfg_);
  d.hof = volume_histogram(std::span(hof_).subspan(s, len), c, cfg_.bins + 1, cfg_);
  d.mbhx = volume_histogram(std::span(mbhx_).subspan(s, len), c, cfg_.bins, cfg_);
  d.mbhy = volume_histogram(std::span(mbhy_).subspan(s, len), c, cfg_.bins, cfg_);
  return d;
}

}  // namespace emvqm
