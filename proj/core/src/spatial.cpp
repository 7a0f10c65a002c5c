#include "emvqm/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emvqm/error.hpp"

namespace emvqm {

void SpatialConfig::validate() const {
  if (patch_size < 8) throw ConfigError("patch_size must be at least 8");
  if (slic_k < 1) throw ConfigError("slic_k must be positive");
  if (!(slic_compactness > 0.0)) throw ConfigError("slic_compactness must be positive");
  if (!(match_gate > 0.0)) throw ConfigError("match_gate must be positive");
  if (registration_radius < 0) throw ConfigError("registration_radius must be non-negative");
  if (frame_stride < 1) throw ConfigError("frame_stride must be positive");
  if (!(matching.ratio > 0.0 && matching.ratio <= 1.0)) throw ConfigError("match ratio must be in (0, 1]");
  if (!(matching.max_disparity >= 0.0)) throw ConfigError("max_disparity must be non-negative");
  elastic.validate();
}

namespace {

int clamp_origin(int origin, int size, int extent) { return std::clamp(origin, 0, extent - size); }

double ssd(const cv::Mat& a, const cv::Mat& b) {
  double s = 0.0;
  for (int r = 0; r < a.rows; ++r) {
    const auto* pa = a.ptr<unsigned char>(r);
    const auto* pb = b.ptr<unsigned char>(r);
    for (int c = 0; c < a.cols; ++c) {
      const double d = static_cast<double>(pa[c]) - pb[c];
      s += d * d;
    }
  }
  return s;
}

}  // namespace

PatchPair cut_patch_pair(const cv::Mat& ref, const cv::Mat& syn, Point2 center_ref, Point2 center_syn, int size,
                         int registration_radius) {
  if (ref.size() != syn.size()) throw DataError("frame size mismatch");
  const int w = std::min({size, ref.cols}), h = std::min({size, ref.rows});
  const int rx = static_cast<int>(std::lround(center_ref.x)) - w / 2;
  const int ry = static_cast<int>(std::lround(center_ref.y)) - h / 2;
  const int dx = static_cast<int>(std::lround(center_syn.x - center_ref.x));
  const int dy = static_cast<int>(std::lround(center_syn.y - center_ref.y));

  // Joint clamp: origin o must satisfy 0 <= o <= W - w and 0 <= o + d <= W - w.
  auto joint = [](int o, int d, int win, int extent) {
    const int lo = std::max(0, -d), hi = std::min(extent - win, extent - win - d);
    if (lo > hi) return std::pair{clamp_origin(o, win, extent), clamp_origin(o + d, win, extent)};
    const int oc = std::clamp(o, lo, hi);
    return std::pair{oc, oc + d};
  };
  const auto [ox_r, ox_s] = joint(rx, dx, w, ref.cols);
  const auto [oy_r, oy_s] = joint(ry, dy, h, ref.rows);

  PatchPair out;
  out.ref_patch = ref(cv::Rect(ox_r, oy_r, w, h)).clone();
  int best_x = ox_s, best_y = oy_s;
  if (registration_radius > 0) {
    double best = std::numeric_limits<double>::infinity();
    int best_l1 = 0;
    for (int ey = -registration_radius; ey <= registration_radius; ++ey) {
      for (int ex = -registration_radius; ex <= registration_radius; ++ex) {
        const int x = ox_s + ex, y = oy_s + ey;
        if (x < 0 || y < 0 || x + w > syn.cols || y + h > syn.rows) continue;
        const double v = ssd(out.ref_patch, syn(cv::Rect(x, y, w, h)));
        const int l1 = std::abs(ex) + std::abs(ey);
        if (v < best || (v == best && l1 < best_l1)) {
          best = v;
          best_l1 = l1;
          best_x = x;
          best_y = y;
        }
      }
    }
  }
  out.syn_patch = syn(cv::Rect(best_x, best_y, w, h)).clone();
  out.center_ref = {ox_r + 0.5 * (w - 1), oy_r + 0.5 * (h - 1)};
  out.center_syn = {best_x + 0.5 * (w - 1), best_y + 0.5 * (h - 1)};
  return out;
}

double patch_dissimilarity(const PatchPair& pair, const SpatialConfig& cfg) {
  const int area = pair.ref_patch.rows * pair.ref_patch.cols;
  const int k = std::min(cfg.slic_k, area);
  const auto ref_labels = slic_segment(pair.ref_patch, k, cfg.slic_compactness);
  const auto syn_labels = slic_segment(pair.syn_patch, k, cfg.slic_compactness);
  const CurvePairSet matched = match_superpixels(ref_labels, syn_labels, cfg.match_gate);
  double total = 0.0;
  for (const auto& p : matched.pairs) {
    try {
      total += elastic_distance(p.ref, p.syn, cfg.elastic);
    } catch (const GeometryError&) {
      // Degenerate contour after resampling; it carries no shape.
    }
  }
  return total;
}

double em_spa_frame(const cv::Mat& ref, const cv::Mat& syn, const SpatialConfig& cfg) {
  cfg.validate();
  if (ref.size() != syn.size()) throw DataError("frame size mismatch");
  const auto kr = detect_keypoints(ref, cfg.keypoints);
  const auto ks = detect_keypoints(syn, cfg.keypoints);
  if (kr.empty() || ks.empty()) return 0.0;
  const auto matches = match_keypoints(kr, ks, cfg.matching);
  double total = 0.0;
  for (const auto& m : matches) {
    const PatchPair pair =
        cut_patch_pair(ref, syn, kr[m.ref].position, ks[m.syn].position, cfg.patch_size, cfg.registration_radius);
    total += patch_dissimilarity(pair, cfg);
  }
  return total;
}

double em_spa_sequence(std::span<const cv::Mat> ref, std::span<const cv::Mat> syn, const SpatialConfig& cfg) {
  cfg.validate();
  if (ref.size() != syn.size()) throw DataError("sequence length mismatch");
  if (ref.empty()) throw DataError("empty sequence");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < ref.size(); i += cfg.frame_stride) {
    sum += em_spa_frame(ref[i], syn[i], cfg);
    ++n;
  }
  return sum / static_cast<double>(n);
}

}  // namespace emvqm
