#include "emvqm/temporal.hpp"

#include <cmath>
#include <numeric>

#include "emvqm/error.hpp"

namespace emvqm {

namespace {

std::vector<double> as_distribution(std::span<const double> h) {
  double s = 0.0;
  for (double v : h) {
    if (v < 0.0) throw DataError("histogram entries must be non-negative");
    s += v;
  }
  std::vector<double> out(h.size());
  if (s > 0.0) {
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] / s;
  } else {
    // eps-smoothing an all-zero histogram leaves the uniform distribution
    for (double& v : out) v = 1.0 / static_cast<double>(h.size());
  }
  return out;
}

double kl_to_mid(const std::vector<double>& p, const std::vector<double>& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / m[i]);
  return s;
}

}  // namespace

const char* to_string(HistogramDistance d) {
  switch (d) {
    case HistogramDistance::jsd:
      return "jsd";
    case HistogramDistance::euclidean:
      return "euclidean";
    case HistogramDistance::cosine:
      return "cosine";
    case HistogramDistance::minkowski:
      return "minkowski";
  }
  return "?";
}

double histogram_distance(std::span<const double> h1, std::span<const double> h2, HistogramDistance kind, double p) {
  if (h1.size() != h2.size()) throw DataError("histogram length mismatch");
  switch (kind) {
    case HistogramDistance::jsd: {
      const auto a = as_distribution(h1), b = as_distribution(h2);
      std::vector<double> m(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
      return std::max(0.0, 0.5 * kl_to_mid(a, m) + 0.5 * kl_to_mid(b, m));
    }
    case HistogramDistance::euclidean: {
      double s = 0.0;
      for (std::size_t i = 0; i < h1.size(); ++i) s += (h1[i] - h2[i]) * (h1[i] - h2[i]);
      return std::sqrt(s);
    }
    case HistogramDistance::cosine: {
      const double dot = std::inner_product(h1.begin(), h1.end(), h2.begin(), 0.0);
      const double n1 = std::sqrt(std::inner_product(h1.begin(), h1.end(), h1.begin(), 0.0));
      const double n2 = std::sqrt(std::inner_product(h2.begin(), h2.end(), h2.begin(), 0.0));
      if (n1 == 0.0 && n2 == 0.0) return 0.0;
      if (n1 == 0.0 || n2 == 0.0) return 1.0;
      return std::clamp(1.0 - dot / (n1 * n2), 0.0, 2.0);
    }
    case HistogramDistance::minkowski: {
      if (!(p >= 1.0)) throw ConfigError("minkowski exponent must be at least 1");
      double s = 0.0;
      for (std::size_t i = 0; i < h1.size(); ++i) s += std::pow(std::abs(h1[i] - h2[i]), p);
      return std::pow(s, 1.0 / p);
    }
  }
  throw ConfigError("unknown histogram distance");
}

void TemporalConfig::validate() const {
  tracker.validate();
  descriptors.validate();
  flow.validate();
  elastic.validate();
  if (!(minkowski_p >= 1.0)) throw ConfigError("minkowski exponent must be at least 1");
}

double trajectory_distance(const Trajectory& a, const Trajectory& b, const TemporalConfig& cfg) {
  const Curve ca(a.points, false), cb(b.points, false);
  if (cfg.normalize_trajectory_length) return elastic_distance(ca, cb, cfg.elastic);
  cfg.elastic.validate();
  return srv_distance(to_srv(ca, cfg.elastic.n_samples), to_srv(cb, cfg.elastic.n_samples), cfg.elastic);
}

double t_em(std::span<const Trajectory> ref, std::span<const Trajectory> syn, std::span<const TrajectoryMatch> matches,
            const TemporalConfig& cfg) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : matches) {
    try {
      sum += trajectory_distance(ref[m.ref], syn[m.syn], cfg);
      ++n;
    } catch (const GeometryError&) {
      // a track that never moves has no shape to compare
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double t_sl(std::span<const DescriptorPair> pairs, DescriptorKind kind, HistogramDistance dist, double p) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& pr : pairs) sum += histogram_distance(pr.ref[kind], pr.syn[kind], dist, p);
  return sum / static_cast<double>(pairs.size());
}

ScaleFeatures scale_features(const ScaleTracks& ref, const ScaleTracks& syn, const TemporalConfig& cfg) {
  ScaleFeatures out;
  const auto matches = match_trajectories(ref.trajectories, syn.trajectories, cfg.tracker.match_radius());
  out.matches = matches.size();
  if (matches.empty()) return out;
  out.valid = true;
  out.t_em = t_em(ref.trajectories, syn.trajectories, matches, cfg);

  const DescriptorExtractor er(ref, cfg.descriptors, cfg.tracker.length);
  const DescriptorExtractor es(syn, cfg.descriptors, cfg.tracker.length);
  std::vector<DescriptorPair> pairs;
  pairs.reserve(matches.size());
  for (const auto& m : matches)
    pairs.push_back({er.describe(ref.trajectories[m.ref]), es.describe(syn.trajectories[m.syn])});
  for (std::size_t i = 0; i < kDescriptorKinds.size(); ++i)
    for (std::size_t j = 0; j < kHistogramDistances.size(); ++j)
      out.t_sl[i * 4 + j] = t_sl(pairs, kDescriptorKinds[i], kHistogramDistances[j], cfg.minkowski_p);
  return out;
}

std::array<ScaleFeatures, kScaleCount> temporal_features(std::span<const cv::Mat> ref, std::span<const cv::Mat> syn,
                                                         const FlowSource& ref_flow, const FlowSource& syn_flow,
                                                         const TemporalConfig& cfg) {
  cfg.validate();
  if (ref.size() != syn.size()) throw DataError("sequence length mismatch");
  if (!ref.empty() && ref.front().size() != syn.front().size()) throw DataError("frame size mismatch");
  TrackerConfig tc = cfg.tracker;
  tc.scales = std::min(tc.scales, kScaleCount);
  const auto tr = track_video(ref, ref_flow, tc);
  const auto ts = track_video(syn, syn_flow, tc);
  std::array<ScaleFeatures, kScaleCount> out{};
  for (std::size_t s = 0; s < tr.size(); ++s) out[s] = scale_features(tr[s], ts[s], cfg);
  return out;
}

std::array<ScaleFeatures, kScaleCount> temporal_features(std::span<const cv::Mat> ref, std::span<const cv::Mat> syn,
                                                         const TemporalConfig& cfg) {
  const ComputedFlow flow(cfg.flow);
  return temporal_features(ref, syn, flow, flow, cfg);
}

FeatureVector assemble_features(std::span<const ScaleFeatures> scales, double em_spa) {
  if (scales.size() != static_cast<std::size_t>(kScaleCount)) throw DataError("expected 7 scales of features");
  FeatureVector f;
  std::size_t k = 0;
  for (std::size_t s = 0; s < scales.size(); ++s) {
    f.valid[s] = scales[s].valid;
    f.values[k++] = scales[s].t_em;
    for (double v : scales[s].t_sl) f.values[k++] = v;
  }
  f.values[k] = em_spa;
  return f;
}

std::string feature_name(std::size_t index) {
  if (index >= kFeatureCount) throw ConfigError("feature index out of range");
  if (index == kFeatureCount - 1) return "em_spa";
  const std::size_t s = index / kPerScaleFeatures, r = index % kPerScaleFeatures;
  const std::string prefix = "s" + std::to_string(s) + ".";
  if (r == 0) return prefix + "t_em";
  return prefix + to_string(kDescriptorKinds[(r - 1) / 4]) + "." + to_string(kHistogramDistances[(r - 1) % 4]);
}

}  // namespace emvqm
