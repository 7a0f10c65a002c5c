#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "emvqm/error.hpp"
#include "emvqm/fixtures.hpp"
#include "emvqm/trajectories.hpp"
#include "motion.hpp"

using namespace emvqm;

namespace {

int reflect(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

// Smaller eigenvalue of the 3x3-summed Sobel structure tensor.
cv::Mat min_eig_oracle(const cv::Mat& img8) {
  const int h = img8.rows, w = img8.cols;
  auto px = [&](int x, int y) { return double(img8.at<uchar>(reflect(y, h), reflect(x, w))); };
  cv::Mat gx(h, w, CV_64F), gy(h, w, CV_64F), out(h, w, CV_64F);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      gx.at<double>(y, x) = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                            (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      gy.at<double>(y, x) = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                            (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double a = 0, b = 0, c = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const double ix = gx.at<double>(reflect(y + dy, h), reflect(x + dx, w));
          const double iy = gy.at<double>(reflect(y + dy, h), reflect(x + dx, w));
          a += ix * ix;
          b += ix * iy;
          c += iy * iy;
        }
      out.at<double>(y, x) = 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    }
  return out;
}

Trajectory line(int start, Point2 p0, Point2 step, int n = kTrajectoryLength) {
  Trajectory t;
  t.start_frame = start;
  for (int i = 0; i < n; ++i) t.points.push_back(p0 + step * i);
  return t;
}

}  // namespace

TEST(SamplePoints, UniformFrameIsEmpty) {
  EXPECT_TRUE(sample_points(cv::Mat(64, 64, CV_8UC1, cv::Scalar(90)), 5, 0.001).empty());
}

TEST(SamplePoints, GridArithmetic) {
  cv::Mat noise(100, 100, CV_8UC1);
  cv::RNG(7).fill(noise, cv::RNG::UNIFORM, 0, 256);
  const auto pts = sample_points(noise, 5, 0.0);
  ASSERT_EQ(pts.size(), 400u);
  EXPECT_EQ(pts.front(), Point2(2, 2));
  EXPECT_EQ(pts.back(), Point2(97, 97));
  EXPECT_THROW(sample_points(noise, 1, 0.0), ConfigError);
}

TEST(SamplePoints, CheckerboardMatchesStructureTensorOracle) {
  cv::Mat board(96, 96, CV_8UC1);
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) board.at<uchar>(y, x) = ((x / 12 + y / 12) % 2) ? 220 : 30;
  const double thr = 0.001;
  const cv::Mat eig = min_eig_oracle(board);
  double max_eig;
  cv::minMaxLoc(eig, nullptr, &max_eig);
  const auto pts = sample_points(board, 5, thr);
  std::set<std::pair<int, int>> kept;
  for (const auto& p : pts) kept.insert({int(p.x), int(p.y)});
  int near_corner = 0;
  for (int y = 2; y < 96; y += 5)
    for (int x = 2; x < 96; x += 5) {
      const double e = eig.at<double>(y, x);
      if (std::abs(e - thr * max_eig) < 0.01 * thr * max_eig) continue;
      EXPECT_EQ(kept.count({x, y}) > 0, e > thr * max_eig) << x << "," << y;
      // Interior of a cell has no structure.
      const int cx = x % 12, cy = y % 12;
      if (cx >= 2 && cx <= 9 && cy >= 2 && cy <= 9) EXPECT_EQ(kept.count({x, y}), 0u);
      if ((cx <= 1 || cx >= 10) && (cy <= 1 || cy >= 10) && kept.count({x, y})) ++near_corner;
    }
  EXPECT_GT(near_corner, 10);
}

TEST(Tracker, ExactConstantFlowGivesExactSteps) {
  const cv::Size size(96, 64);
  cv::Mat tex;
  test::wave_texture(size).convertTo(tex, CV_8U);
  TrackerConfig cfg;
  Tracker tr(0, size, cfg);
  const FlowField f = FlowField::constant(size, {2.0, 0.0});
  for (int t = 0; t < 20; ++t) {
    if (t + cfg.length <= 20) tr.seed(tex, t);
    tr.advance(f);
  }
  const auto done = tr.take_completed();
  ASSERT_FALSE(done.empty());
  for (const auto& t : done) {
    ASSERT_EQ(t.points.size(), 15u);
    for (std::size_t i = 1; i < t.points.size(); ++i) {
      EXPECT_EQ(t.points[i].x - t.points[i - 1].x, 2.0);
      EXPECT_EQ(t.points[i].y - t.points[i - 1].y, 0.0);
    }
    EXPECT_LE(t.points.back().x, size.width - 1);
  }
  // Nothing crosses the right border: starts are at most 28 px from it.
  for (const auto& t : done) EXPECT_LE(t.points.front().x, size.width - 1 - 28);
}

TEST(Tracker, SeedingRespectsExclusionRadius) {
  const cv::Size size(64, 64);
  cv::Mat noise(size, CV_8UC1);
  cv::RNG(3).fill(noise, cv::RNG::UNIFORM, 0, 256);
  TrackerConfig cfg;
  Tracker tr(0, size, cfg);
  tr.seed(noise, 0);
  const std::size_t first = tr.active();
  EXPECT_GT(first, 100u);
  tr.seed(noise, 0);  // every grid point is occupied
  EXPECT_EQ(tr.active(), first);
  // Half a step of motion frees no grid point either (heads stay within W/2).
  tr.advance(FlowField::constant(size, {2.0, 0.0}));
  tr.seed(noise, 1);
  EXPECT_EQ(tr.active(), first);
  tr.advance(FlowField::constant(size, {1.0, 0.0}));  // now 3 px away
  tr.seed(noise, 2);
  EXPECT_GT(tr.active(), first);
}

TEST(Tracker, OutwardFlowAtBorderDiscards) {
  const cv::Size size(64, 64);
  cv::Mat noise(size, CV_8UC1);
  cv::RNG(9).fill(noise, cv::RNG::UNIFORM, 0, 256);
  TrackerConfig cfg;
  cfg.step = 62;  // single grid point at (31, 31)
  Tracker tr(0, size, cfg);
  tr.seed(noise, 0);
  ASSERT_EQ(tr.active(), 1u);
  tr.advance(FlowField::constant(size, {31.25, 0.0}));  // x = 62.25, inside
  EXPECT_EQ(tr.active(), 1u);
  tr.advance(FlowField::constant(size, {1.0, 0.0}));
  EXPECT_EQ(tr.active(), 0u);
}

TEST(Prune, StaticAndErratic) {
  TrackerConfig cfg;
  EXPECT_TRUE(is_static(line(0, {10, 10}, {0, 0}), cfg));
  EXPECT_FALSE(is_static(line(0, {10, 10}, {2, 0}), cfg));
  Trajectory jump = line(0, {10, 10}, {1, 0});
  for (std::size_t i = 7; i < jump.points.size(); ++i) jump.points[i].x += 40.0;
  EXPECT_TRUE(is_erratic(jump, cfg));
  EXPECT_FALSE(is_erratic(line(0, {10, 10}, {2, 0}), cfg));
  const auto kept = prune({line(0, {10, 10}, {0, 0}), line(0, {10, 10}, {2, 0}), jump}, cfg);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].points[1].x, 12.0);
  // Spread of a 2 px/frame line: sqrt(mean((2i - 14)^2)) for i = 0..14.
  double s = 0;
  for (int i = 0; i < 15; ++i) s += (2.0 * i - 14.0) * (2.0 * i - 14.0);
  EXPECT_NEAR(line(0, {0, 0}, {2, 0}).spread(), std::sqrt(s / 15.0), 1e-12);
}

TEST(MatchTrajectories, IdentityOffsetAndEmpty) {
  std::vector<Trajectory> ref;
  for (int i = 0; i < 6; ++i) ref.push_back(line(i % 2, {10.0 + 7 * i, 20.0}, {1.5, 0.5}));
  auto m = match_trajectories(ref, ref, 10.0);
  ASSERT_EQ(m.size(), ref.size());
  for (const auto& p : m) {
    EXPECT_EQ(p.ref, p.syn);
    EXPECT_EQ(p.distance, 0.0);
  }
  std::vector<Trajectory> syn = ref;
  for (auto& t : syn)
    for (auto& p : t.points) p.y += 1.0;
  m = match_trajectories(ref, syn, 10.0);
  ASSERT_EQ(m.size(), ref.size());
  for (const auto& p : m) {
    EXPECT_EQ(p.ref, p.syn);
    EXPECT_NEAR(p.distance, 1.0, 1e-12);
  }
  EXPECT_TRUE(match_trajectories(ref, std::vector<Trajectory>{}, 10.0).empty());
}

TEST(MatchTrajectories, OneToOneSameStartAndRadius) {
  const std::vector<Trajectory> ref{line(0, {10, 10}, {1, 0}), line(0, {12, 10}, {1, 0})};
  const std::vector<Trajectory> syn{line(0, {11, 10}, {1, 0}), line(1, {10, 10}, {1, 0}), line(0, {40, 10}, {1, 0})};
  const auto m = match_trajectories(ref, syn, 10.0);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].syn, 0u);
  EXPECT_EQ(m[0].ref, 0u);  // tie at distance 1 broken by index
  EXPECT_LE(m.size(), std::min(ref.size(), syn.size()));
}

TEST(TrackVideo, TranslatingSquareWithExactFlow) {
  FixtureParams p;
  p.width = 128;
  p.height = 96;
  p.frames = 20;
  const auto fx = make_fixture(FixtureKind::translating_square, p);
  const InjectedFlow flow([&](int t) { return test::square_flow(p, t); });
  TrackerConfig cfg;
  cfg.scales = 1;
  const auto tracks = track_video(fx.ref.frames, flow, cfg);
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].flows.size(), 19u);
  int interior = 0;
  for (const auto& t : tracks[0].trajectories) {
    ASSERT_EQ(t.points.size(), 15u);
    const SquareTruth sq = translating_square_truth(p, t.start_frame);
    if (sq.signed_distance(t.points.front()) > -1.0) continue;
    ++interior;
    const Point2 truth = t.points.front() + sq.velocity * 14.0;
    EXPECT_LE(cv::norm(t.points.back() - truth), 1e-9);
  }
  EXPECT_GT(interior, 20);
}

TEST(TrackVideo, StaticSceneHasNoTrajectories) {
  FixtureParams p;
  p.width = 96;
  p.height = 96;
  p.frames = 16;
  const auto fx = make_fixture(FixtureKind::static_scene, p, 4);
  const auto tracks = track_video(fx.ref.frames, ComputedFlow());
  EXPECT_EQ(tracks.size(), 4u);  // 96, 68, 48, 34
  for (const auto& s : tracks) EXPECT_TRUE(s.trajectories.empty()) << "scale " << s.scale;
}
