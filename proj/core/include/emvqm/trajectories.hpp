#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "emvqm/curve.hpp"
#include "emvqm/optical_flow.hpp"
#include "emvqm/pyramid.hpp"

namespace emvqm {

constexpr int kTrajectoryLength = 15;

struct Trajectory {
  int scale = 0;
  int start_frame = 0;
  std::vector<Point2> points;  // level coordinates, one per frame

  bool complete(int length = kTrajectoryLength) const { return static_cast<int>(points.size()) == length; }
  Point2 mean() const;
  // Root mean square distance of the points from their mean.
  double spread() const;
  double max_step() const;
};

struct TrackerConfig {
  int step = 5;                      // sampling step W in px
  double structure_threshold = 0.001;
  double static_threshold = 0.5;
  double erratic_threshold = 0.7 * 32.0 * std::sqrt(2.0);
  int length = kTrajectoryLength;
  double match_radius_steps = 2.0;   // matching radius in units of W
  int scales = kPyramidLevels;

  double match_radius() const { return match_radius_steps * step; }
  void validate() const;
};

// Grid points every `step` px, starting at step / 2, whose 3x3 structure
// tensor has a smaller eigenvalue above threshold * (frame maximum).
std::vector<Point2> sample_points(const cv::Mat& frame, int step, double structure_threshold);

// Tracks points through one pyramid level.
class Tracker {
 public:
  Tracker(int scale, cv::Size size, const TrackerConfig& cfg);

  // Starts trajectories at frame_index on sampled points with no active head
  // within step / 2.
  void seed(const cv::Mat& frame, int frame_index);
  // Moves every head by the 3x3 median of the flow at its rounded position;
  // heads leaving the frame are dropped, full-length tracks are emitted.
  void advance(const FlowField& flow);

  std::vector<Trajectory> take_completed();
  std::size_t active() const { return active_.size(); }

 private:
  int scale_;
  cv::Size size_;
  TrackerConfig cfg_;
  std::vector<Trajectory> active_;
  std::vector<Trajectory> done_;
};

bool is_static(const Trajectory& t, const TrackerConfig& cfg);
bool is_erratic(const Trajectory& t, const TrackerConfig& cfg);
std::vector<Trajectory> prune(std::vector<Trajectory> trajectories, const TrackerConfig& cfg);

struct TrajectoryMatch {
  std::size_t ref = 0;
  std::size_t syn = 0;
  double distance = 0.0;
};

// Greedy one-to-one matching of trajectories with the same start frame on
// their mean position; pairs further apart than radius are rejected.
std::vector<TrajectoryMatch> match_trajectories(std::span<const Trajectory> ref, std::span<const Trajectory> syn,
                                                double radius);

// All the data one pyramid level contributes to the temporal features.
struct ScaleTracks {
  int scale = 0;
  std::vector<cv::Mat> frames;    // CV_32F level images
  std::vector<FlowField> flows;   // flows[t]: frame t to t + 1
  std::vector<Trajectory> trajectories;  // complete and pruned
};

// Builds pyramids for every frame and tracks each level independently.
std::vector<ScaleTracks> track_video(std::span<const cv::Mat> frames, const FlowSource& flow,
                                     const TrackerConfig& cfg = {});

}  // namespace emvqm
