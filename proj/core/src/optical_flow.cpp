#include "emvqm/optical_flow.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "emvqm/error.hpp"

namespace emvqm {

namespace {

constexpr int kMinFlowSide = 8;

cv::Mat to_float(const cv::Mat& m) {
  if (m.type() == CV_32F) return m;
  cv::Mat f;
  m.convertTo(f, CV_32F);
  return f;
}

void refine_level(const cv::Mat& i0, const cv::Mat& i1, cv::Mat& u, cv::Mat& v, const FlowConfig& cfg) {
  cv::Mat ix, iy;
  cv::Sobel(i0, ix, CV_32F, 1, 0, 3, 1.0 / 8.0, 0.0, cv::BORDER_REFLECT_101);
  cv::Sobel(i0, iy, CV_32F, 0, 1, 3, 1.0 / 8.0, 0.0, cv::BORDER_REFLECT_101);
  const cv::Size win(0, 0);
  const double s = cfg.window_sigma;
  cv::Mat axx, axy, ayy;
  cv::GaussianBlur(ix.mul(ix), axx, win, s, s, cv::BORDER_REFLECT_101);
  cv::GaussianBlur(ix.mul(iy), axy, win, s, s, cv::BORDER_REFLECT_101);
  cv::GaussianBlur(iy.mul(iy), ayy, win, s, s, cv::BORDER_REFLECT_101);
  const float lambda = static_cast<float>(cfg.regularization);
  axx += lambda;
  ayy += lambda;
  const cv::Mat det = axx.mul(ayy) - axy.mul(axy);

  cv::Mat gx(i0.size(), CV_32F), gy(i0.size(), CV_32F);
  for (int r = 0; r < i0.rows; ++r) {
    auto* px = gx.ptr<float>(r);
    auto* py = gy.ptr<float>(r);
    for (int c = 0; c < i0.cols; ++c) {
      px[c] = static_cast<float>(c);
      py[c] = static_cast<float>(r);
    }
  }

  cv::Mat warped, it, bx, by;
  for (int k = 0; k < cfg.warps; ++k) {
    cv::remap(i1, warped, gx + u, gy + v, cv::INTER_LINEAR, cv::BORDER_REPLICATE);
    it = warped - i0;
    cv::GaussianBlur(ix.mul(it), bx, win, s, s, cv::BORDER_REFLECT_101);
    cv::GaussianBlur(iy.mul(it), by, win, s, s, cv::BORDER_REFLECT_101);
    for (int r = 0; r < i0.rows; ++r) {
      const float* a = axx.ptr<float>(r);
      const float* b = axy.ptr<float>(r);
      const float* d = ayy.ptr<float>(r);
      const float* dt = det.ptr<float>(r);
      const float* ex = bx.ptr<float>(r);
      const float* ey = by.ptr<float>(r);
      float* pu = u.ptr<float>(r);
      float* pv = v.ptr<float>(r);
      for (int c = 0; c < i0.cols; ++c) {
        pu[c] -= (d[c] * ex[c] - b[c] * ey[c]) / dt[c];
        pv[c] -= (a[c] * ey[c] - b[c] * ex[c]) / dt[c];
      }
    }
  }
}

}  // namespace

FlowField FlowField::zeros(cv::Size size) {
  return {cv::Mat::zeros(size, CV_32F), cv::Mat::zeros(size, CV_32F)};
}

FlowField FlowField::constant(cv::Size size, Point2 d) {
  return {cv::Mat(size, CV_32F, cv::Scalar(d.x)), cv::Mat(size, CV_32F, cv::Scalar(d.y))};
}

void FlowConfig::validate() const {
  if (levels < 1) throw ConfigError("flow levels must be positive");
  if (warps < 1) throw ConfigError("flow warps must be positive");
  if (!(window_sigma > 0.0)) throw ConfigError("flow window must be positive");
  if (!(regularization > 0.0)) throw ConfigError("flow regularization must be positive");
  if (!(max_flow > 0.0)) throw ConfigError("max_flow must be positive");
}

FlowField compute_flow(const cv::Mat& prev, const cv::Mat& next, const FlowConfig& cfg) {
  cfg.validate();
  if (prev.size() != next.size()) throw DataError("frame size mismatch");
  if (prev.channels() != 1 || next.channels() != 1) throw DataError("flow needs single-channel frames");

  std::vector<cv::Mat> p0{to_float(prev)}, p1{to_float(next)};
  while (static_cast<int>(p0.size()) < cfg.levels) {
    const cv::Size s = p0.back().size();
    if ((s.width + 1) / 2 < kMinFlowSide || (s.height + 1) / 2 < kMinFlowSide) break;
    cv::Mat a, b;
    cv::pyrDown(p0.back(), a);
    cv::pyrDown(p1.back(), b);
    p0.push_back(a);
    p1.push_back(b);
  }

  cv::Mat u = cv::Mat::zeros(p0.back().size(), CV_32F), v = u.clone();
  for (int l = static_cast<int>(p0.size()) - 1; l >= 0; --l) {
    const cv::Size s = p0[l].size();
    if (u.size() != s) {
      const double fx = static_cast<double>(s.width) / u.cols, fy = static_cast<double>(s.height) / u.rows;
      cv::resize(u, u, s, 0, 0, cv::INTER_LINEAR);
      cv::resize(v, v, s, 0, 0, cv::INTER_LINEAR);
      u *= fx;
      v *= fy;
    }
    refine_level(p0[l], p1[l], u, v, cfg);
    cv::medianBlur(u, u, 3);
    cv::medianBlur(v, v, 3);
    const double lim = cfg.max_flow * s.width / prev.cols;
    cv::patchNaNs(u, 0.0);
    cv::patchNaNs(v, 0.0);
    u = cv::min(cv::max(u, -lim), lim);
    v = cv::min(cv::max(v, -lim), lim);
  }
  return {u, v};
}

FlowField rescale_flow(const FlowField& flow, cv::Size size) {
  if (flow.size() == size) return flow;
  FlowField out;
  cv::resize(flow.u, out.u, size, 0, 0, cv::INTER_LINEAR);
  cv::resize(flow.v, out.v, size, 0, 0, cv::INTER_LINEAR);
  out.u *= static_cast<double>(size.width) / flow.u.cols;
  out.v *= static_cast<double>(size.height) / flow.u.rows;
  return out;
}

FlowField ComputedFlow::flow(int, const cv::Mat& prev, const cv::Mat& next) const {
  return compute_flow(prev, next, cfg_);
}

FlowField InjectedFlow::flow(int frame, const cv::Mat& prev, const cv::Mat&) const {
  return rescale_flow(loader_(frame), prev.size());
}

}  // namespace emvqm
