#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include <opencv2/imgproc.hpp>

#include "emvqm/error.hpp"
#include "emvqm/keypoints.hpp"

using namespace emvqm;

namespace {

cv::Mat disk_frame(int size, double radius, Point2 center) {
  cv::Mat img(size, size, CV_8UC1, cv::Scalar(40));
  cv::circle(img, cv::Point(static_cast<int>(center.x), static_cast<int>(center.y)), static_cast<int>(radius),
             cv::Scalar(220), cv::FILLED, cv::LINE_8);
  return img;
}

cv::Mat textured(int rows, int cols, unsigned seed) {
  cv::Mat noise(rows, cols, CV_32F);
  cv::RNG rng(seed);
  rng.fill(noise, cv::RNG::UNIFORM, 0.0, 255.0);
  cv::GaussianBlur(noise, noise, cv::Size(0, 0), 2.5);
  cv::Mat out;
  cv::normalize(noise, noise, 0, 255, cv::NORM_MINMAX);
  noise.convertTo(out, CV_8U);
  return out;
}

// Scale-normalised Gaussian det-Hessian at the centre of a disk, evaluated
// densely over sigma. Returns the sigma of the strongest response.
double gaussian_doh_peak_sigma(const cv::Mat& img, cv::Point center) {
  cv::Mat f;
  img.convertTo(f, CV_64F, 1.0 / 255.0);
  double best_sigma = 0.0, best = -1.0;
  for (double sigma = 6.0; sigma <= 24.0; sigma += 0.25) {
    cv::Mat g, dxx, dyy, dxy;
    cv::GaussianBlur(f, g, cv::Size(0, 0), sigma, sigma, cv::BORDER_REPLICATE);
    cv::Sobel(g, dxx, CV_64F, 2, 0, 3, 1.0, 0, cv::BORDER_REPLICATE);
    cv::Sobel(g, dyy, CV_64F, 0, 2, 3, 1.0, 0, cv::BORDER_REPLICATE);
    cv::Sobel(g, dxy, CV_64F, 1, 1, 3, 0.25, 0, cv::BORDER_REPLICATE);
    const double a = dxx.at<double>(center), b = dyy.at<double>(center), c = dxy.at<double>(center);
    const double det = std::pow(sigma, 4) * (a * b - c * c);
    if (det > best) {
      best = det;
      best_sigma = sigma;
    }
  }
  return best_sigma;
}

// Box-filter det-Hessian at one pixel, summed pixel by pixel.
double brute_box_response(const cv::Mat& img, int r, int c, int filter) {
  const int l = filter / 3, b = (filter - 1) / 2;
  auto px = [&](int y, int x) { return img.at<uchar>(y, x) / 255.0; };
  double dxx = 0, dyy = 0, dxy = 0;
  for (int y = r - l + 1; y <= r + l - 1; ++y)
    for (int x = c - b; x <= c + b; ++x) {
      const bool centre = x >= c - l / 2 && x < c - l / 2 + l;
      dxx += (centre ? -2.0 : 1.0) * px(y, x);
      dyy += (centre ? -2.0 : 1.0) * px(r + (x - c), c + (y - r));
    }
  for (int y = 1; y <= l; ++y)
    for (int x = 1; x <= l; ++x)
      dxy += px(r - y, c + x) + px(r + y, c - x) - px(r - y, c - x) - px(r + y, c + x);
  const double a = 1.0 / (double(filter) * filter);
  return (dxx * a) * (dyy * a) - 0.81 * (dxy * a) * (dxy * a);
}

}  // namespace

TEST(Keypoints, BoxResponseMatchesBruteForce) {
  // The disk is symmetric, so transposing x and y in the dyy sum is exact.
  const cv::Mat img = disk_frame(256, 20, {128, 128});
  int best_filter = 0;
  double best = -1;
  for (int filter = 9; filter <= 195; filter += 6) {
    const double v = std::abs(brute_box_response(img, 128, 128, filter));
    if (v > best) {
      best = v;
      best_filter = filter;
    }
  }
  const auto kps = detect_keypoints(img);
  ASSERT_FALSE(kps.empty());
  const Keypoint* strongest = &kps.front();
  for (const auto& kp : kps)
    if (kp.response > strongest->response) strongest = &kp;
  // Within one coarse filter step of the brute-force argmax.
  EXPECT_NEAR(strongest->scale, 1.2 * best_filter / 9.0, 1.2 * 24 / 9.0);
}

TEST(Keypoints, UniformFrameHasNone) {
  cv::Mat img(128, 128, CV_8UC1, cv::Scalar(90));
  EXPECT_TRUE(detect_keypoints(img).empty());
}

TEST(Keypoints, RejectsBadInput) {
  EXPECT_THROW(detect_keypoints(cv::Mat()), DataError);
  EXPECT_THROW(detect_keypoints(cv::Mat(32, 32, CV_8UC1, cv::Scalar(0))), DataError);
  EXPECT_THROW(detect_keypoints(cv::Mat(128, 128, CV_32F, cv::Scalar(0))), DataError);
}

TEST(Keypoints, DiskCentreAndScaleAgreeWithGaussianOracle) {
  const cv::Mat img = disk_frame(256, 20, {128, 128});
  const auto kps = detect_keypoints(img);
  ASSERT_FALSE(kps.empty());
  const Keypoint* strongest = &kps.front();
  for (const auto& kp : kps)
    if (kp.response > strongest->response) strongest = &kp;
  EXPECT_NEAR(strongest->position.x, 128.0, 3.0);
  EXPECT_NEAR(strongest->position.y, 128.0, 3.0);

  const double sigma = gaussian_doh_peak_sigma(img, {128, 128});
  EXPECT_NEAR(sigma, 20.0 / std::sqrt(2.0), 1.0);
  // Box filters peak earlier than the Gaussian on a hard-edged disk.
  EXPECT_NEAR(strongest->scale, sigma, 0.3 * sigma);
}

TEST(Keypoints, CheckerboardCornersDetected) {
  cv::Mat img(256, 256, CV_8UC1);
  for (int r = 0; r < 256; ++r)
    for (int c = 0; c < 256; ++c) img.at<uchar>(r, c) = ((r / 32 + c / 32) % 2) ? 200 : 50;
  const auto kps = detect_keypoints(img);
  // Interior corners lie at multiples of 32; count distinct ones hit.
  std::set<std::pair<int, int>> hit;
  for (const auto& kp : kps) {
    const int gx = static_cast<int>(std::lround(kp.position.x / 32.0));
    const int gy = static_cast<int>(std::lround(kp.position.y / 32.0));
    if (gx < 1 || gx > 7 || gy < 1 || gy > 7) continue;
    // Pixel centres sit at integers, so the edge between squares is at 32k - 0.5.
    if (std::abs(kp.position.x - (32.0 * gx - 0.5)) <= 1.5 && std::abs(kp.position.y - (32.0 * gy - 0.5)) <= 1.5)
      hit.insert({gx, gy});
  }
  EXPECT_GE(hit.size(), 36u);
}

TEST(Keypoints, DescriptorsAreUnitNorm) {
  const auto kps = detect_keypoints(textured(160, 160, 3));
  ASSERT_GT(kps.size(), 10u);
  for (const auto& kp : kps) {
    double n = 0.0;
    for (double d : kp.descriptor) n += d * d;
    EXPECT_NEAR(n, 1.0, 1e-9);
    EXPECT_GT(kp.scale, 0.0);
  }
}

TEST(Keypoints, IdenticalFramesMatchToThemselves) {
  const auto kps = detect_keypoints(textured(160, 160, 5));
  const auto matches = match_keypoints(kps, kps);
  ASSERT_EQ(matches.size(), kps.size());
  for (const auto& m : matches) EXPECT_EQ(m.ref, m.syn);
}

TEST(Keypoints, ShiftedFrameMatchesAtShift) {
  const cv::Mat base = textured(200, 240, 7);
  const cv::Mat ref = base(cv::Rect(10, 0, 220, 200)).clone();
  const cv::Mat syn = base(cv::Rect(5, 0, 220, 200)).clone();  // content moves +5 in x
  const auto kr = detect_keypoints(ref);
  const auto ks = detect_keypoints(syn);
  const auto matches = match_keypoints(kr, ks);
  ASSERT_GT(kr.size(), 20u);
  std::size_t good = 0;
  for (const auto& m : matches) {
    const Point2 d = ks[m.syn].position - kr[m.ref].position;
    if (std::abs(d.x - 5.0) <= 1.0 && std::abs(d.y) <= 1.0) ++good;
  }
  ASSERT_GT(matches.size(), 0u);
  EXPECT_GE(static_cast<double>(good), 0.8 * matches.size());
  EXPECT_GE(static_cast<double>(matches.size()), 0.5 * kr.size());
}

TEST(Keypoints, NoiseFrameRarelyMatches) {
  cv::Mat noise(160, 160, CV_8UC1);
  cv::RNG(99).fill(noise, cv::RNG::UNIFORM, 0, 256);
  const auto ka = detect_keypoints(textured(160, 160, 11));
  const auto kb = detect_keypoints(noise);
  const auto matches = match_keypoints(ka, kb);
  ASSERT_GT(ka.size(), 10u);
  EXPECT_LT(static_cast<double>(matches.size()), 0.05 * ka.size() + 1.0);
}

TEST(Keypoints, MatchesAreOneToOne) {
  const auto ka = detect_keypoints(textured(160, 160, 21));
  const auto kb = detect_keypoints(textured(160, 160, 21));
  const auto matches = match_keypoints(ka, kb, {.ratio = 0.95, .max_disparity = 200.0});
  std::set<std::size_t> seen_r, seen_s;
  for (const auto& m : matches) {
    EXPECT_TRUE(seen_r.insert(m.ref).second);
    EXPECT_TRUE(seen_s.insert(m.syn).second);
  }
}

TEST(Keypoints, EmptyInputsGiveNoMatches) {
  std::vector<Keypoint> none;
  const auto kps = detect_keypoints(textured(128, 128, 2));
  EXPECT_TRUE(match_keypoints(none, kps).empty());
  EXPECT_TRUE(match_keypoints(kps, none).empty());
}
