#include "emvqm/fixtures.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "emvqm/error.hpp"
#include "emvqm/video_io.hpp"

namespace emvqm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kSuper = 4;

struct Texture {
  double base = 150.0;
  double amp1 = 45.0, px1 = 9.0, py1 = 11.0, ph1 = 0.0, ph2 = 0.0;
  double amp2 = 20.0, p2 = 17.0, ph3 = 0.0;

  double operator()(double u, double v) const {
    return base + amp1 * std::sin(kTwoPi * u / px1 + ph1) * std::sin(kTwoPi * v / py1 + ph2) +
           amp2 * std::sin(kTwoPi * (u + v) / p2 + ph3);
  }
};

// A textured object whose texture is attached to its own frame.
struct Object {
  enum class Shape { disc, rect } shape = Shape::disc;
  Point2 center0;
  Point2 velocity;
  double radius = 0.0;       // disc
  Point2 half{0.0, 0.0};     // rect half sizes
  std::function<double(double, int)> ripple;  // disc radius offset (phi, frame)
  bool warp_texture = false;  // stretch the texture radially with the ripple
  Texture texture;

  Point2 center(int t) const { return center0 + velocity * t; }

  double boundary(double phi, int t) const { return radius + (ripple ? ripple(phi, t) : 0.0); }

  // Signed distance proxy: negative inside. Exact for rects, radial for discs.
  double signed_distance(double x, double y, int t) const {
    const Point2 c = center(t);
    const double u = x - c.x, v = y - c.y;
    if (shape == Shape::disc) return std::hypot(u, v) - boundary(std::atan2(v, u), t);
    const double dx = std::abs(u) - half.x, dy = std::abs(v) - half.y;
    return std::max(dx, dy);
  }

  double value(double x, double y, int t) const {
    const Point2 c = center(t);
    double u = x - c.x, v = y - c.y;
    if (warp_texture && ripple) {
      // Radial map rho -> rho (1 + ripple / R): the centre stays put and the
      // rim lands on the rippled boundary.
      const double k = 1.0 + ripple(std::atan2(v, u), t) / radius;
      u /= k;
      v /= k;
    }
    return texture(u, v);
  }
};

struct Scene {
  bool gradient_background = true;
  double flat_background = 100.0;
  Point2 camera{0.0, 0.0};  // content is displaced by +camera
  int width = 0, height = 0;
  std::vector<Object> objects;  // painter order

  double background(double x, double y) const {
    if (!gradient_background) return flat_background;
    return 70.0 + 50.0 * x / width + 30.0 * y / height;
  }

  double sample(double x, double y, int t) const {
    x -= camera.x;
    y -= camera.y;
    double v = background(x, y);
    for (const auto& o : objects)
      if (o.signed_distance(x, y, t) < 0.0) v = o.value(x, y, t);
    return v;
  }

  bool near_edge(double x, double y, int t) const {
    x -= camera.x;
    y -= camera.y;
    for (const auto& o : objects)
      if (std::abs(o.signed_distance(x, y, t)) < 2.0) return true;
    return false;
  }

  cv::Mat render(int t) const {
    cv::Mat out(height, width, CV_8UC1);
    for (int r = 0; r < height; ++r) {
      auto* row = out.ptr<unsigned char>(r);
      for (int c = 0; c < width; ++c) {
        double v;
        if (near_edge(c, r, t)) {
          v = 0.0;
          for (int sy = 0; sy < kSuper; ++sy)
            for (int sx = 0; sx < kSuper; ++sx)
              v += sample(c + (sx + 0.5) / kSuper - 0.5, r + (sy + 0.5) / kSuper - 0.5, t);
          v /= kSuper * kSuper;
        } else {
          v = sample(c, r, t);
        }
        row[c] = static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
    return out;
  }

  VideoSource video(int frames) const {
    std::vector<cv::Mat> out;
    out.reserve(frames);
    for (int t = 0; t < frames; ++t) out.push_back(render(t));
    return make_video(std::move(out));
  }
};

Texture random_texture(std::mt19937_64& rng, double base) {
  std::uniform_real_distribution<double> ph(0.0, kTwoPi);
  Texture tx;
  tx.base = base;
  tx.ph1 = ph(rng);
  tx.ph2 = ph(rng);
  tx.ph3 = ph(rng);
  return tx;
}

// The standard two-object scene.
Scene standard_scene(const FixtureParams& p, std::uint64_t seed, bool moving) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  Scene s;
  s.width = p.width;
  s.height = p.height;
  const double m = std::min(p.width, p.height);

  Object disc;
  disc.shape = Object::Shape::disc;
  disc.center0 = {(0.35 + jitter(rng)) * p.width, (0.40 + jitter(rng)) * p.height};
  disc.velocity = moving ? Point2{1.0, 0.5} : Point2{0.0, 0.0};
  disc.radius = 0.16 * m;
  disc.texture = random_texture(rng, 165.0);

  Object rect;
  rect.shape = Object::Shape::rect;
  rect.center0 = {(0.72 + jitter(rng)) * p.width, (0.68 + jitter(rng)) * p.height};
  rect.velocity = moving ? Point2{-0.6, -0.3} : Point2{0.0, 0.0};
  rect.half = {0.11 * p.width, 0.13 * p.height};
  rect.texture = random_texture(rng, 105.0);
  rect.texture.px1 = 7.0;
  rect.texture.py1 = 13.0;

  s.objects = {disc, rect};
  return s;
}

std::function<double(double, int)> warp_ripple(const FixtureParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const double phase0 = std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
  const double amp = p.amplitude;
  const int lobes = p.lobes;
  const double speed = p.phase_speed;
  return [=](double phi, int t) { return amp * std::sin(lobes * phi + speed * t + phase0); };
}

void check_params(const FixtureParams& p) {
  if (p.width < 64 || p.height < 64) throw ConfigError("fixture frames must be at least 64x64");
  if (p.frames < static_cast<int>(kMinFrames)) throw ConfigError("fixture needs at least 16 frames");
  if (p.amplitude < 0.0) throw ConfigError("warp amplitude must be non-negative");
  if (p.amplitude >= 0.16 * std::min(p.width, p.height)) throw ConfigError("warp amplitude must be below the disc radius");
  if (p.lobes < 1) throw ConfigError("ripple lobes must be positive");
}

}  // namespace

FixtureKind parse_fixture_kind(const std::string& name) {
  if (name == "identical") return FixtureKind::identical;
  if (name == "global_shift") return FixtureKind::global_shift;
  if (name == "local_warp") return FixtureKind::local_warp;
  if (name == "translating_square") return FixtureKind::translating_square;
  if (name == "static_scene") return FixtureKind::static_scene;
  if (name == "contour_deform") return FixtureKind::contour_deform;
  throw ConfigError("unknown fixture kind " + name);
}

std::string to_string(FixtureKind kind) {
  switch (kind) {
    case FixtureKind::identical:
      return "identical";
    case FixtureKind::global_shift:
      return "global_shift";
    case FixtureKind::local_warp:
      return "local_warp";
    case FixtureKind::translating_square:
      return "translating_square";
    case FixtureKind::static_scene:
      return "static_scene";
    case FixtureKind::contour_deform:
      return "contour_deform";
  }
  return "unknown";
}

DiscTruth local_warp_disc(const FixtureParams& params, std::uint64_t seed, int frame) {
  const Scene s = standard_scene(params, seed, true);
  return {s.objects[0].center(frame), s.objects[0].radius};
}

double local_warp_radius(const FixtureParams& params, std::uint64_t seed, int frame, double phi) {
  return local_warp_disc(params, seed, frame).radius + warp_ripple(params, seed)(phi, frame);
}

FixturePair make_fixture(FixtureKind kind, const FixtureParams& params, std::uint64_t seed) {
  check_params(params);
  FixturePair out;
  switch (kind) {
    case FixtureKind::identical: {
      const Scene s = standard_scene(params, seed, true);
      out.ref = s.video(params.frames);
      out.syn = out.ref;
      break;
    }
    case FixtureKind::global_shift: {
      Scene s = standard_scene(params, seed, true);
      out.ref = s.video(params.frames);
      s.camera = params.shift;
      out.syn = s.video(params.frames);
      break;
    }
    case FixtureKind::local_warp: {
      Scene s = standard_scene(params, seed, true);
      out.ref = s.video(params.frames);
      s.objects[0].ripple = warp_ripple(params, seed);
      s.objects[0].warp_texture = true;
      out.syn = s.video(params.frames);
      break;
    }
    case FixtureKind::translating_square: {
      std::mt19937_64 rng(seed);
      Scene s;
      s.width = params.width;
      s.height = params.height;
      s.gradient_background = false;
      const SquareTruth truth = translating_square_truth(params, 0);
      Object sq;
      sq.shape = Object::Shape::rect;
      sq.half = {truth.half, truth.half};
      sq.center0 = truth.center;
      sq.velocity = truth.velocity;
      sq.texture = random_texture(rng, 150.0);
      sq.texture.px1 = 8.0;
      sq.texture.py1 = 8.0;
      s.objects = {sq};
      out.ref = s.video(params.frames);
      out.syn = out.ref;
      break;
    }
    case FixtureKind::static_scene: {
      const Scene s = standard_scene(params, seed, false);
      out.ref = s.video(params.frames);
      out.syn = out.ref;
      break;
    }
    case FixtureKind::contour_deform: {
      const double m = std::min(params.width, params.height);
      const ContourDeform cd =
          make_contour_deform(seed, params.amplitude, 0.0, 0.18 * m, {0.45 * params.width, 0.5 * params.height});
      Scene s = standard_scene(params, seed, true);
      Object& blob = s.objects[0];
      blob.center0 = cd.center;
      blob.radius = 0.0;
      blob.ripple = [cd](double phi, int) { return cd.base_radius(phi); };
      out.ref = s.video(params.frames);
      blob.ripple = [cd](double phi, int) { return cd.warped_radius(phi); };
      out.syn = s.video(params.frames);
      break;
    }
  }
  return out;
}

double SquareTruth::signed_distance(Point2 p) const {
  return std::max(std::abs(p.x - center.x), std::abs(p.y - center.y)) - half;
}

SquareTruth translating_square_truth(const FixtureParams& params, int frame) {
  SquareTruth t;
  t.half = 24.0;
  t.velocity = params.velocity;
  t.center = Point2{0.25 * params.width, 0.5 * params.height} + params.velocity * frame;
  return t;
}

double ContourDeform::base_radius(double phi) const {
  double r = 1.0;
  for (std::size_t k = 0; k < a.size(); ++k) r += a[k] * std::cos((k + 2) * phi + p[k]);
  return radius * r;
}

double ContourDeform::warped_radius(double phi) const {
  const double window = 0.5 * (1.0 + std::cos(phi - ripple_phase));
  return base_radius(phi) + amplitude * window * std::sin(ripple_lobes * phi);
}

namespace {

Curve sample_star(int n, Point2 center, const std::function<double(double)>& r) {
  std::vector<Point2> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double phi = kTwoPi * i / n;
    const double rad = r(phi);
    pts.push_back(center + Point2{rad * std::cos(phi), rad * std::sin(phi)});
  }
  return Curve(std::move(pts), true);
}

}  // namespace

Curve ContourDeform::reference(int n) const {
  return sample_star(n, center, [this](double phi) { return base_radius(phi); });
}

Curve ContourDeform::shifted(int n) const {
  return sample_star(n, center + shift, [this](double phi) { return base_radius(phi); });
}

Curve ContourDeform::warped(int n) const {
  return sample_star(n, center, [this](double phi) { return warped_radius(phi); });
}

ContourDeform make_contour_deform(std::uint64_t seed, double amplitude, double shift, double radius, Point2 center) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-0.06, 0.06);
  std::uniform_real_distribution<double> ang(0.0, kTwoPi);
  ContourDeform cd;
  cd.center = center;
  cd.radius = radius;
  for (int k = 0; k < 3; ++k) {
    cd.a.push_back(coef(rng));
    cd.p.push_back(ang(rng));
  }
  const double dir = ang(rng);
  cd.shift = {shift * std::cos(dir), shift * std::sin(dir)};
  cd.amplitude = amplitude;
  cd.ripple_lobes = 7;
  cd.ripple_phase = ang(rng);
  return cd;
}

cv::Mat rasterize_star(const cv::Size& size, Point2 center, const std::function<double(double)>& radius,
                       unsigned char fg, unsigned char bg) {
  cv::Mat out(size, CV_8UC1);
  for (int r = 0; r < size.height; ++r) {
    for (int c = 0; c < size.width; ++c) {
      int inside = 0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double u = c + (sx + 0.5) / kSuper - 0.5 - center.x;
          const double v = r + (sy + 0.5) / kSuper - 0.5 - center.y;
          if (std::hypot(u, v) < radius(std::atan2(v, u))) ++inside;
        }
      }
      const double t = static_cast<double>(inside) / (kSuper * kSuper);
      out.at<unsigned char>(r, c) = static_cast<unsigned char>(std::lround(bg + t * (fg - bg)));
    }
  }
  return out;
}

Manifest write_fixture_dataset(const std::filesystem::path& dir, const DatasetParams& params, std::uint64_t seed) {
  if (params.count < 1) throw ConfigError("dataset needs at least one record");
  if (params.levels < 2) throw ConfigError("dataset needs at least two amplitude levels");
  if (!(params.max_amplitude > 0.0)) throw ConfigError("max_amplitude must be positive");
  if (!(params.noise >= 0.0)) throw ConfigError("noise must be non-negative");
  FixtureParams fp = params.fixture;
  fp.amplitude = params.max_amplitude;
  check_params(fp);

  std::filesystem::create_directories(dir / "videos");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, params.noise);
  Manifest m;
  for (int i = 0; i < params.count; ++i) {
    const int level = i % params.levels;
    fp.amplitude = params.max_amplitude * level / (params.levels - 1);
    const auto pair = make_fixture(FixtureKind::local_warp, fp, seed * 1000003ULL + static_cast<std::uint64_t>(i));
    char id[32];
    std::snprintf(id, sizeof id, "w%03d", i);
    const std::string ref = std::string("videos/") + id + "_ref.y4m", syn = std::string("videos/") + id + "_syn.y4m";
    write_y4m(dir / ref, pair.ref);
    write_y4m(dir / syn, pair.syn);
    const double dmos = 1.0 + fp.amplitude + (params.noise > 0.0 ? noise(rng) : 0.0);
    m.entries.push_back({id, ref, syn, "level" + std::to_string(level), dmos, params.noise});
  }
  write_manifest(dir / "manifest.csv", m);
  return m;
}

}  // namespace emvqm
