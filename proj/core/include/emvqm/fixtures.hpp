#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "emvqm/curve.hpp"
#include "emvqm/manifest.hpp"
#include "emvqm/video_io.hpp"

namespace emvqm {

enum class FixtureKind { identical, global_shift, local_warp, translating_square, static_scene, contour_deform };

FixtureKind parse_fixture_kind(const std::string& name);
std::string to_string(FixtureKind kind);

struct FixtureParams {
  int width = 256;
  int height = 256;
  int frames = 20;
  Point2 shift{2.0, 0.0};     // global_shift: syn content displacement
  double amplitude = 4.0;     // local_warp / contour_deform: boundary displacement in px
  int lobes = 6;              // local_warp: angular frequency of the boundary ripple
  double phase_speed = 0.35;  // local_warp: ripple phase advance per frame (rad)
  Point2 velocity{2.0, 0.0};  // translating_square: px per frame
};

struct FixturePair {
  VideoSource ref;
  VideoSource syn;
};

// Deterministic synthetic pair. The scene is a smooth gradient background
// with textured moving objects; kinds differ only in how syn departs from ref.
FixturePair make_fixture(FixtureKind kind, const FixtureParams& params = {}, std::uint64_t seed = 0);

// Ground truth for local_warp: the textured disc of frame t.
struct DiscTruth {
  Point2 center;
  double radius = 0.0;
};
DiscTruth local_warp_disc(const FixtureParams& params, std::uint64_t seed, int frame);
// Boundary radius of the warped disc at polar angle phi (image coordinates).
double local_warp_radius(const FixtureParams& params, std::uint64_t seed, int frame, double phi);

// Ground truth for translating_square: an axis-aligned square of half size
// `half` centred at `center` in the given frame.
struct SquareTruth {
  Point2 center;
  double half = 0.0;
  Point2 velocity;

  // Signed distance to the boundary (negative inside).
  double signed_distance(Point2 p) const;
};
SquareTruth translating_square_truth(const FixtureParams& params, int frame);

// Star-shaped blob r(phi) = R (1 + sum_k a_k cos(k phi + p_k)) for the
// contour ordering fixture. shifted() is the same blob displaced by a
// sub-pixel vector; warped() adds a sinusoidal radial ripple of the given
// amplitude (px) on one half of the boundary.
struct ContourDeform {
  Point2 center;
  double radius = 0.0;
  std::vector<double> a, p;
  Point2 shift;
  double amplitude = 0.0;
  int ripple_lobes = 0;
  double ripple_phase = 0.0;

  double base_radius(double phi) const;
  double warped_radius(double phi) const;
  Curve reference(int n) const;
  Curve shifted(int n) const;
  Curve warped(int n) const;
};
ContourDeform make_contour_deform(std::uint64_t seed, double amplitude = 4.0, double shift = 2.0, double radius = 18.0,
                                  Point2 center = {32.0, 32.0});

// Rasterises a closed star-shaped region given by radius(phi) around center:
// fg inside, bg outside, 4x4 supersampling.
cv::Mat rasterize_star(const cv::Size& size, Point2 center, const std::function<double(double)>& radius,
                       unsigned char fg = 200, unsigned char bg = 50);

// Synthetic rated dataset: local_warp pairs over distinct content seeds with
// amplitudes cycling through `levels` evenly spaced values in
// [0, max_amplitude]. dmos = 1 + amplitude + N(0, noise), dmos_stderr = noise
// and the group names the amplitude level.
struct DatasetParams {
  int count = 30;
  int levels = 10;
  double max_amplitude = 4.0;
  double noise = 0.1;
  FixtureParams fixture{128, 128, 20};
};

// Writes <dir>/videos/<id>_{ref,syn}.y4m and <dir>/manifest.csv.
Manifest write_fixture_dataset(const std::filesystem::path& dir, const DatasetParams& params = {},
                               std::uint64_t seed = 0);

}  // namespace emvqm
