#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "emvqm/curve.hpp"
#include "emvqm/descriptors.hpp"
#include "emvqm/optical_flow.hpp"
#include "emvqm/trajectories.hpp"

namespace emvqm {

enum class HistogramDistance { jsd = 0, euclidean = 1, cosine = 2, minkowski = 3 };
constexpr std::array<HistogramDistance, 4> kHistogramDistances{HistogramDistance::jsd, HistogramDistance::euclidean,
                                                               HistogramDistance::cosine, HistogramDistance::minkowski};
const char* to_string(HistogramDistance d);

// jsd uses natural logs and sum-normalised inputs; an all-zero histogram is
// read as uniform. cosine of two zero vectors is 0.
double histogram_distance(std::span<const double> h1, std::span<const double> h2, HistogramDistance kind,
                          double p = 3.0);

constexpr int kScaleCount = 7;
constexpr int kPerScaleFeatures = 17;
constexpr std::size_t kFeatureCount = kScaleCount * kPerScaleFeatures + 1;

struct TemporalConfig {
  TrackerConfig tracker;
  DescriptorConfig descriptors;
  FlowConfig flow;
  ElasticParams elastic;
  bool normalize_trajectory_length = true;
  double minkowski_p = 3.0;

  void validate() const;
};

// Elastic distance between two trajectories read as open curves.
double trajectory_distance(const Trajectory& a, const Trajectory& b, const TemporalConfig& cfg);

struct DescriptorPair {
  TrajectoryDescriptors ref;
  TrajectoryDescriptors syn;
};

// Mean elastic distance over the matched pairs, 0 when there are none.
double t_em(std::span<const Trajectory> ref, std::span<const Trajectory> syn, std::span<const TrajectoryMatch> matches,
            const TemporalConfig& cfg);

// Mean histogram distance of one descriptor kind over the matched pairs.
double t_sl(std::span<const DescriptorPair> pairs, DescriptorKind kind, HistogramDistance dist, double p = 3.0);

struct ScaleFeatures {
  bool valid = false;  // at least one matched trajectory pair
  std::size_t matches = 0;
  double t_em = 0.0;
  std::array<double, 16> t_sl{};  // [descriptor kind][distance]
};

ScaleFeatures scale_features(const ScaleTracks& ref, const ScaleTracks& syn, const TemporalConfig& cfg);

// Tracks both videos and evaluates every scale; scales the pyramid cannot
// reach stay invalid with zero entries.
std::array<ScaleFeatures, kScaleCount> temporal_features(std::span<const cv::Mat> ref, std::span<const cv::Mat> syn,
                                                         const FlowSource& ref_flow, const FlowSource& syn_flow,
                                                         const TemporalConfig& cfg = {});

std::array<ScaleFeatures, kScaleCount> temporal_features(std::span<const cv::Mat> ref, std::span<const cv::Mat> syn,
                                                         const TemporalConfig& cfg = {});

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  std::array<bool, kScaleCount> valid{};
};

// Per scale: T_EM then T_SL for hog, hof, mbhx, mbhy, each over jsd,
// euclidean, cosine, minkowski. EM_spa is the last entry.
FeatureVector assemble_features(std::span<const ScaleFeatures> scales, double em_spa);

// "s3.hof.cosine", "s0.t_em", "em_spa".
std::string feature_name(std::size_t index);

}  // namespace emvqm
