#include "emvqm/trajectories.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <tuple>

#include <opencv2/imgproc.hpp>

#include "emvqm/error.hpp"

namespace emvqm {

Point2 Trajectory::mean() const {
  Point2 m(0.0, 0.0);
  for (const auto& p : points) m += p;
  return points.empty() ? m : m * (1.0 / static_cast<double>(points.size()));
}

double Trajectory::spread() const {
  if (points.empty()) return 0.0;
  const Point2 m = mean();
  double s = 0.0;
  for (const auto& p : points) s += (p - m).dot(p - m);
  return std::sqrt(s / static_cast<double>(points.size()));
}

double Trajectory::max_step() const {
  double m = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) m = std::max(m, cv::norm(points[i] - points[i - 1]));
  return m;
}

void TrackerConfig::validate() const {
  if (step < 2) throw ConfigError("sampling step must be at least 2");
  if (!(structure_threshold >= 0.0)) throw ConfigError("structure threshold must be non-negative");
  if (!(static_threshold >= 0.0)) throw ConfigError("static threshold must be non-negative");
  if (!(erratic_threshold > 0.0)) throw ConfigError("erratic threshold must be positive");
  if (length < 2) throw ConfigError("trajectory length must be at least 2");
  if (!(match_radius_steps > 0.0)) throw ConfigError("match radius must be positive");
  if (scales < 1) throw ConfigError("scale count must be positive");
}

std::vector<Point2> sample_points(const cv::Mat& frame, int step, double structure_threshold) {
  if (step < 2) throw ConfigError("sampling step must be at least 2");
  cv::Mat f;
  frame.convertTo(f, CV_32F);
  cv::Mat eig;
  cv::cornerMinEigenVal(f, eig, 3, 3, cv::BORDER_REFLECT_101);
  double max_eig = 0.0;
  cv::minMaxLoc(eig, nullptr, &max_eig);
  const double thresh = structure_threshold * max_eig;
  std::vector<Point2> out;
  if (!(max_eig > 0.0)) return out;
  for (int y = step / 2; y < f.rows; y += step)
    for (int x = step / 2; x < f.cols; x += step)
      if (eig.at<float>(y, x) > thresh) out.emplace_back(x, y);
  return out;
}

Tracker::Tracker(int scale, cv::Size size, const TrackerConfig& cfg) : scale_(scale), size_(size), cfg_(cfg) {
  cfg_.validate();
}

void Tracker::seed(const cv::Mat& frame, int frame_index) {
  if (frame.size() != size_) throw DataError("frame size mismatch");
  const double r = 0.5 * cfg_.step;
  // Bucket heads on a grid of cell size step so each query checks 3x3 cells.
  const int cell = cfg_.step;
  std::map<std::pair<int, int>, std::vector<Point2>> grid;
  auto key = [cell](Point2 p) {
    return std::pair{static_cast<int>(std::floor(p.x / cell)), static_cast<int>(std::floor(p.y / cell))};
  };
  for (const auto& t : active_) grid[key(t.points.back())].push_back(t.points.back());
  for (const Point2& p : sample_points(frame, cfg_.step, cfg_.structure_threshold)) {
    const auto [cx, cy] = key(p);
    bool free = true;
    for (int dy = -1; dy <= 1 && free; ++dy)
      for (int dx = -1; dx <= 1 && free; ++dx) {
        const auto it = grid.find({cx + dx, cy + dy});
        if (it == grid.end()) continue;
        for (const auto& h : it->second)
          if (cv::norm(h - p) < r) {
            free = false;
            break;
          }
      }
    if (!free) continue;
    Trajectory t;
    t.scale = scale_;
    t.start_frame = frame_index;
    t.points.push_back(p);
    active_.push_back(std::move(t));
  }
}

void Tracker::advance(const FlowField& flow) {
  if (flow.size() != size_) throw DataError("flow size mismatch");
  std::vector<Trajectory> keep;
  keep.reserve(active_.size());
  std::array<float, 9> mu{}, mv{};
  for (auto& t : active_) {
    const Point2 p = t.points.back();
    const int x = static_cast<int>(std::lround(p.x)), y = static_cast<int>(std::lround(p.y));
    int n = 0;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int xx = std::clamp(x + dx, 0, size_.width - 1), yy = std::clamp(y + dy, 0, size_.height - 1);
        mu[n] = flow.u.at<float>(yy, xx);
        mv[n] = flow.v.at<float>(yy, xx);
        ++n;
      }
    std::nth_element(mu.begin(), mu.begin() + 4, mu.end());
    std::nth_element(mv.begin(), mv.begin() + 4, mv.end());
    const Point2 q = p + Point2(mu[4], mv[4]);
    if (q.x < 0.0 || q.y < 0.0 || q.x > size_.width - 1 || q.y > size_.height - 1) continue;
    t.points.push_back(q);
    if (static_cast<int>(t.points.size()) >= cfg_.length) {
      done_.push_back(std::move(t));
    } else {
      keep.push_back(std::move(t));
    }
  }
  active_ = std::move(keep);
}

std::vector<Trajectory> Tracker::take_completed() { return std::exchange(done_, {}); }

bool is_static(const Trajectory& t, const TrackerConfig& cfg) { return t.spread() < cfg.static_threshold; }

bool is_erratic(const Trajectory& t, const TrackerConfig& cfg) { return t.max_step() > cfg.erratic_threshold; }

std::vector<Trajectory> prune(std::vector<Trajectory> trajectories, const TrackerConfig& cfg) {
  std::erase_if(trajectories, [&](const Trajectory& t) { return is_static(t, cfg) || is_erratic(t, cfg); });
  return trajectories;
}

std::vector<TrajectoryMatch> match_trajectories(std::span<const Trajectory> ref, std::span<const Trajectory> syn,
                                                double radius) {
  std::vector<Point2> mr(ref.size()), ms(syn.size());
  for (std::size_t i = 0; i < ref.size(); ++i) mr[i] = ref[i].mean();
  for (std::size_t j = 0; j < syn.size(); ++j) ms[j] = syn[j].mean();

  std::map<int, std::vector<std::size_t>> syn_by_start;
  for (std::size_t j = 0; j < syn.size(); ++j) syn_by_start[syn[j].start_frame].push_back(j);

  std::vector<TrajectoryMatch> cand;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto it = syn_by_start.find(ref[i].start_frame);
    if (it == syn_by_start.end()) continue;
    for (std::size_t j : it->second) {
      const double d = cv::norm(mr[i] - ms[j]);
      if (d <= radius) cand.push_back({i, j, d});
    }
  }
  std::sort(cand.begin(), cand.end(), [](const TrajectoryMatch& a, const TrajectoryMatch& b) {
    return std::tie(a.distance, a.ref, a.syn) < std::tie(b.distance, b.ref, b.syn);
  });
  std::vector<char> used_r(ref.size(), 0), used_s(syn.size(), 0);
  std::vector<TrajectoryMatch> out;
  for (const auto& c : cand) {
    if (used_r[c.ref] || used_s[c.syn]) continue;
    used_r[c.ref] = used_s[c.syn] = 1;
    out.push_back(c);
  }
  return out;
}

std::vector<ScaleTracks> track_video(std::span<const cv::Mat> frames, const FlowSource& flow,
                                     const TrackerConfig& cfg) {
  cfg.validate();
  if (frames.size() < 2) throw DataError("too few frames");
  const auto sizes = pyramid_sizes(frames.front().size(), cfg.scales);
  std::vector<ScaleTracks> out(sizes.size());
  for (std::size_t s = 0; s < sizes.size(); ++s) out[s].scale = static_cast<int>(s);
  for (const auto& f : frames) {
    if (f.size() != frames.front().size()) throw DataError("inconsistent frame sizes");
    Pyramid p = build_pyramid(f, cfg.scales);
    for (std::size_t s = 0; s < sizes.size(); ++s) out[s].frames.push_back(std::move(p.levels[s]));
  }

  const int n = static_cast<int>(frames.size());
  for (auto& st : out) {
    Tracker tracker(st.scale, sizes[st.scale], cfg);
    for (int t = 0; t + 1 < n; ++t) {
      // Tracks seeded later than this cannot reach full length.
      if (t + cfg.length <= n) tracker.seed(st.frames[t], t);
      st.flows.push_back(flow.flow(t, st.frames[t], st.frames[t + 1]));
      if (st.flows.back().size() != sizes[st.scale]) throw DataError("flow size mismatch");
      tracker.advance(st.flows.back());
    }
    st.trajectories = prune(tracker.take_completed(), cfg);
  }
  return out;
}

}  // namespace emvqm
