#pragma once

#include <array>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "emvqm/optical_flow.hpp"
#include "emvqm/trajectories.hpp"

namespace emvqm {

enum class DescriptorKind { hog = 0, hof = 1, mbhx = 2, mbhy = 3 };
constexpr std::array<DescriptorKind, 4> kDescriptorKinds{DescriptorKind::hog, DescriptorKind::hof, DescriptorKind::mbhx,
                                                         DescriptorKind::mbhy};
const char* to_string(DescriptorKind kind);

struct DescriptorConfig {
  int volume = 32;       // N, spatial side of the volume in px
  int cells_xy = 2;      // spatial cells per side
  int cells_t = 3;       // temporal cells
  int bins = 8;          // orientation bins
  double zero_flow = 0.4;

  void validate() const;
  int cells() const { return cells_xy * cells_xy * cells_t; }
};

// Per-pixel soft orientation votes: weight w0 to bin b0 and w1 to bin b0 + 1
// (mod bins). Bin k is centred on angle 2 pi k / bins. b0 == bins marks the
// zero-motion bin of flow histograms.
struct OrientationField {
  cv::Mat b0;  // CV_32S
  cv::Mat w0;  // CV_32F
  cv::Mat w1;  // CV_32F
};

// Orientation of the central-difference gradient, weighted by magnitude.
OrientationField gradient_orientations(const cv::Mat& plane, int bins);
// Orientation of the flow vectors; vectors shorter than zero_flow vote 1 for
// the extra zero bin.
OrientationField flow_orientations(const FlowField& flow, int bins, double zero_flow);

// Accumulates the votes of a trajectory-aligned volume: frame i contributes
// the N x N window around round(centers[i]). Pixels outside the frame add
// nothing. The concatenated cell histograms are L2-normalised unless all zero.
std::vector<double> volume_histogram(std::span<const OrientationField> frames, std::span<const Point2> centers,
                                     int bins_per_cell, const DescriptorConfig& cfg);

struct TrajectoryDescriptors {
  std::vector<double> hog;
  std::vector<double> hof;
  std::vector<double> mbhx;
  std::vector<double> mbhy;

  const std::vector<double>& operator[](DescriptorKind k) const;
};

// Precomputes orientation fields for every frame of one pyramid level.
class DescriptorExtractor {
 public:
  DescriptorExtractor(const ScaleTracks& tracks, const DescriptorConfig& cfg = {}, int length = kTrajectoryLength);

  TrajectoryDescriptors describe(const Trajectory& t) const;

 private:
  DescriptorConfig cfg_;
  int length_ = kTrajectoryLength;
  std::vector<OrientationField> hog_, hof_, mbhx_, mbhy_;
};

}  // namespace emvqm
