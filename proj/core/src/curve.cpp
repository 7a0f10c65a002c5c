#include "emvqm/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emvqm/error.hpp"

namespace emvqm {

namespace {

double norm(Point2 p) { return std::hypot(p.x, p.y); }

// Polyline view used by the resampler: vertices plus the closing segment.
struct Polyline {
  std::vector<Point2> vertices;
  std::vector<double> seg_start;  // arc position where each segment starts
  std::vector<double> seg_len;
  double total = 0.0;

  explicit Polyline(const Curve& c) : vertices(c.points()) {
    const std::size_t m = vertices.size();
    const std::size_t segments = c.closed() ? m : m - 1;
    seg_start.resize(segments);
    seg_len.resize(segments);
    for (std::size_t s = 0; s < segments; ++s) {
      seg_start[s] = total;
      seg_len[s] = norm(vertex(s + 1) - vertex(s));
      total += seg_len[s];
    }
  }

  std::size_t segments() const { return seg_len.size(); }
  const Point2& vertex(std::size_t i) const { return vertices[i % vertices.size()]; }
  Point2 at(std::size_t seg, double t) const {
    return vertex(seg) + (vertex(seg + 1) - vertex(seg)) * t;
  }
};

struct WalkPosition {
  std::size_t seg = 0;
  double t = 0.0;
  double arc = 0.0;  // unwrapped arc position
};

// Finds the first point after `from` along the polyline whose Euclidean
// distance to `from` equals d. Returns false when the polyline ends first.
bool step_chord(const Polyline& poly, bool closed, const WalkPosition& from, double d,
                WalkPosition& to) {
  const Point2 p = poly.at(from.seg, from.t);
  const std::size_t nseg = poly.segments();
  double wrap = from.arc - (poly.seg_start[from.seg] + from.t * poly.seg_len[from.seg]);
  std::size_t seg = from.seg;
  double t_min = from.t;
  bool first = true;
  // A full extra lap is enough: if nothing is found the whole curve is
  // within d of p.
  for (std::size_t visited = 0; visited <= nseg + 1; ++visited) {
    const double len = poly.seg_len[seg];
    if (len > 0.0) {
      const Point2 a = poly.vertex(seg);
      const Point2 ab = poly.vertex(seg + 1) - a;
      const Point2 ap = a - p;
      const double qa = ab.dot(ab);
      const double qb = 2.0 * ap.dot(ab);
      const double qc = ap.dot(ap) - d * d;
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        // Larger root is the exit from the disc of radius d around p.
        const double root = (-qb + sq) / (2.0 * qa);
        const bool ahead = first ? root > t_min : root >= t_min;
        if (ahead && root <= 1.0) {
          to.seg = seg;
          to.t = root;
          to.arc = wrap + poly.seg_start[seg] + root * len;
          return true;
        }
      }
    }
    first = false;
    t_min = 0.0;
    ++seg;
    if (seg == nseg) {
      if (!closed) return false;
      seg = 0;
      wrap += poly.total;
    }
  }
  return false;
}

// Signed arc mismatch after `steps` chord steps of length d.
double walk_residual(const Polyline& poly, bool closed, int steps, double d) {
  WalkPosition pos;
  for (int k = 0; k < steps; ++k) {
    WalkPosition next;
    if (!step_chord(poly, closed, pos, d, next)) {
      // Ran off the end (or the curve is too small for d): overshoot.
      return poly.total + static_cast<double>(steps - k) * d;
    }
    pos = next;
  }
  return pos.arc - poly.total;
}

double solve_chord(const Polyline& poly, bool closed, int steps) {
  // Chords never exceed arcs, so d = L / steps overshoots and d = 0 undershoots.
  double lo = 0.0;
  double hi = poly.total / steps;
  double f_lo = -poly.total;
  double f_hi = walk_residual(poly, closed, steps, hi);
  if (f_hi == 0.0) return hi;
  const double tol = 1e-13 * poly.total;
  int side = 0;
  double d = hi;
  for (int iter = 0; iter < 200; ++iter) {
    d = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(d > lo && d < hi)) d = 0.5 * (lo + hi);
    const double f = walk_residual(poly, closed, steps, d);
    if (std::abs(f) <= tol || hi - lo <= 1e-15 * poly.total) return d;
    if (f < 0.0) {
      lo = d;
      f_lo = f;
      if (side == -1) f_hi *= 0.5;  // Illinois modification
      side = -1;
    } else {
      hi = d;
      f_hi = f;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
  }
  return d;
}

double stationary_tolerance(double length) { return 1e-12 * std::max(length, 1e-300); }

}  // namespace

Curve::Curve(std::vector<Point2> points, bool closed) : points_(std::move(points)), closed_(closed) {
  const std::size_t min_points = closed_ ? 3 : 2;
  if (points_.size() < min_points) throw GeometryError("too few curve points");
  for (const auto& p : points_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw GeometryError("non-finite curve point");
  }
}

double Curve::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) total += norm(points_[i] - points_[i - 1]);
  if (closed_) total += norm(points_.front() - points_.back());
  return total;
}

Curve Curve::translated(Point2 offset) const {
  auto pts = points_;
  for (auto& p : pts) p += offset;
  return Curve(std::move(pts), closed_);
}

Curve Curve::scaled(double factor) const {
  auto pts = points_;
  for (auto& p : pts) p *= factor;
  return Curve(std::move(pts), closed_);
}

SrvCurve::SrvCurve(std::vector<Point2> q, bool closed) : q_(std::move(q)), closed_(closed) {
  if (q_.size() < 2) throw GeometryError("too few srv samples");
}

double SrvCurve::dk() const {
  const auto n = static_cast<double>(q_.size());
  return closed_ ? 1.0 / n : 1.0 / (n - 1.0);
}

double SrvCurve::log_speed(std::size_t i) const { return std::log(q_[i].dot(q_[i])); }

Point2 SrvCurve::direction(std::size_t i) const {
  const double r = norm(q_[i]);
  return r > 0.0 ? q_[i] / r : Point2{};
}

void ElasticParams::validate() const {
  if (!(a2 >= 0.0) || !(b2 >= 0.0) || (a2 == 0.0 && b2 == 0.0)) {
    throw ConfigError("elastic weights must be non-negative and not both zero");
  }
  if (n_samples < 8) throw ConfigError("n_samples must be at least 8");
}

bool ElasticParams::is_flat() const { return a2 == 0.25 && b2 == 1.0; }

Curve resample_uniform(const Curve& curve, int n) {
  const int min_n = curve.closed() ? 3 : 2;
  if (n < min_n) throw GeometryError("too few resampling points");
  const Polyline poly(curve);
  if (!(poly.total > 0.0)) throw GeometryError("degenerate curve");

  const int steps = curve.closed() ? n : n - 1;
  const double d = solve_chord(poly, curve.closed(), steps);

  std::vector<Point2> out;
  out.reserve(n);
  WalkPosition pos;
  out.push_back(poly.vertex(0));
  for (int k = 1; k < n; ++k) {
    WalkPosition next;
    if (!step_chord(poly, curve.closed(), pos, d, next)) break;
    pos = next;
    out.push_back(poly.at(pos.seg, pos.t));
  }
  // The root finder stops within 1e-13 L; pad or pin the tail accordingly.
  while (static_cast<int>(out.size()) < n) out.push_back(curve.closed() ? poly.vertex(0) : curve.points().back());
  if (!curve.closed()) out.back() = curve.points().back();
  return Curve(std::move(out), curve.closed());
}

SrvCurve to_srv(const Curve& curve, int n) {
  const Curve c = resample_uniform(curve, n);
  const auto& p = c.points();
  const bool closed = c.closed();
  const double dk = closed ? 1.0 / n : 1.0 / (n - 1.0);
  const double tol = stationary_tolerance(curve.length());

  std::vector<Point2> q(n);
  for (int i = 0; i < n; ++i) {
    Point2 dc;
    if (closed) {
      dc = (p[(i + 1) % n] - p[(i + n - 1) % n]) / (2.0 * dk);
    } else if (i == 0) {
      dc = (p[1] - p[0]) / dk;
    } else if (i == n - 1) {
      dc = (p[n - 1] - p[n - 2]) / dk;
    } else {
      dc = (p[i + 1] - p[i - 1]) / (2.0 * dk);
    }
    const double speed = norm(dc);
    if (speed <= tol) throw GeometryError("stationary segment");
    q[i] = dc / std::sqrt(speed);
  }
  return SrvCurve(std::move(q), closed);
}

Curve from_srv(const SrvCurve& srv) {
  const auto& q = srv.q();
  const std::size_t n = srv.n();
  const double dk = srv.dk();
  std::vector<Point2> vel(n);
  for (std::size_t i = 0; i < n; ++i) vel[i] = q[i] * norm(q[i]);

  std::vector<Point2> c(n);
  c[0] = Point2{0.0, 0.0};
  if (!srv.closed()) {
    // Exact inverse of the one-sided/central difference stencil.
    c[1] = c[0] + vel[0] * dk;
    for (std::size_t i = 1; i + 1 < n; ++i) c[i + 1] = c[i - 1] + vel[i] * (2.0 * dk);
    return Curve(std::move(c), false);
  }

  if (n % 2 == 1) {
    // Odd n: the stride-2 leapfrog visits every index starting from c_0.
    std::size_t j = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const std::size_t mid = (j + 1) % n;
      const std::size_t next = (j + 2) % n;
      c[next] = c[j] + vel[mid] * (2.0 * dk);
      j = next;
    }
    return Curve(std::move(c), true);
  }

  // Even n: the central stencil decouples even and odd samples. Each chain is
  // integrated separately, and the odd chain's offset is chosen so that the
  // chord lengths come out as uniform as possible (exact for input produced
  // by to_srv).
  for (std::size_t i = 2; i < n; i += 2) c[i] = c[i - 2] + vel[i - 1] * (2.0 * dk);
  c[1] = c[0] + vel[0] * dk;
  for (std::size_t i = 3; i < n; i += 2) c[i] = c[i - 2] + vel[i - 1] * (2.0 * dk);

  // |a_j|^2 - |b_j|^2 is affine in the offset delta; least squares over j.
  double m00 = 0, m01 = 0, m11 = 0, r0 = 0, r1 = 0;
  for (std::size_t j = 1; j < n; j += 2) {
    const Point2 e0 = c[j - 1];
    const Point2 e1 = c[(j + 1) % n];
    const Point2 o = c[j];
    const double k = (o - e0).dot(o - e0) - (e1 - o).dot(e1 - o);
    const Point2 g = (e1 - e0) * 2.0;
    m00 += g.x * g.x;
    m01 += g.x * g.y;
    m11 += g.y * g.y;
    r0 -= g.x * k;
    r1 -= g.y * k;
  }
  const double det = m00 * m11 - m01 * m01;
  if (std::abs(det) > 1e-300) {
    const Point2 delta{(m11 * r0 - m01 * r1) / det, (m00 * r1 - m01 * r0) / det};
    for (std::size_t j = 1; j < n; j += 2) c[j] += delta;
  }
  return Curve(std::move(c), true);
}

double srv_distance(const SrvCurve& a, const SrvCurve& b, const ElasticParams& params) {
  if (a.closed() != b.closed()) throw GeometryError("curve kind mismatch");
  if (a.n() != b.n()) throw GeometryError("srv sample count mismatch");
  const std::size_t n = a.n();
  const auto& qa = a.q();
  const auto& qb = b.q();
  const bool flat = params.is_flat();

  auto sample_cost = [&](const Point2& x, const Point2& y) {
    if (flat) {
      const Point2 diff = x - y;
      return diff.dot(diff);
    }
    // Stretch term on sqrt-speed, bend term on unit directions weighted by
    // the geometric mean speed; reduces to |x - y|^2 for a2 = 1/4, b2 = 1.
    const double rx = norm(x);
    const double ry = norm(y);
    const double stretch = (rx - ry) * (rx - ry);
    double bend = 0.0;
    if (rx > 0.0 && ry > 0.0) {
      const Point2 dtheta = x / rx - y / ry;
      bend = rx * ry * dtheta.dot(dtheta);
    }
    return 4.0 * params.a2 * stretch + params.b2 * bend;
  };

  const std::size_t shifts = (a.closed() && params.cyclic_align) ? n : 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < shifts; ++s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j = i + s;
      if (j >= n) j -= n;
      // trapezoid on K = [0, 1] for open curves
      const double w = (!a.closed() && (i == 0 || i + 1 == n)) ? 0.5 : 1.0;
      sum += w * sample_cost(qa[i], qb[j]);
      if (sum >= best) break;
    }
    best = std::min(best, sum);
  }
  return std::sqrt(best * a.dk());
}

double elastic_distance(const Curve& a, const Curve& b, const ElasticParams& params) {
  params.validate();
  if (a.closed() != b.closed()) throw GeometryError("curve kind mismatch");
  const double la = a.length();
  const double lb = b.length();
  if (!(la > 0.0) || !(lb > 0.0)) throw GeometryError("degenerate curve");
  const SrvCurve qa = to_srv(a.scaled(1.0 / la), params.n_samples);
  const SrvCurve qb = to_srv(b.scaled(1.0 / lb), params.n_samples);
  return srv_distance(qa, qb, params);
}

}  // namespace emvqm
