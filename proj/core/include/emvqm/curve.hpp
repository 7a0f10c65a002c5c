#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <opencv2/core/types.hpp>

namespace emvqm {

using Point2 = cv::Point2d;

// Sampled planar curve. Open curves live on K = [0, 1], closed ones on the
// circle; a closed curve does not repeat its first point at the end.
class Curve {
 public:
  Curve(std::vector<Point2> points, bool closed);

  const std::vector<Point2>& points() const { return points_; }
  bool closed() const { return closed_; }
  std::size_t size() const { return points_.size(); }

  // Polyline length, including the closing segment for closed curves.
  double length() const;

  Curve translated(Point2 offset) const;
  Curve scaled(double factor) const;

 private:
  std::vector<Point2> points_;
  bool closed_;
};

// Square-root-velocity samples q_i = c'(k_i) / sqrt(|c'(k_i)|) on a uniform
// parameter grid (dk = 1/n closed, 1/(n-1) open).
class SrvCurve {
 public:
  SrvCurve(std::vector<Point2> q, bool closed);

  const std::vector<Point2>& q() const { return q_; }
  bool closed() const { return closed_; }
  std::size_t n() const { return q_.size(); }
  double dk() const;

  // phi(k) = ln |c'(k)| and theta(k) = c'(k) / |c'(k)|.
  double log_speed(std::size_t i) const;
  Point2 direction(std::size_t i) const;

 private:
  std::vector<Point2> q_;
  bool closed_;
};

// Weights of the elastic metric. a2 = 1/4, b2 = 1 makes the metric flat on
// SRV space, which is the default.
struct ElasticParams {
  double a2 = 0.25;
  double b2 = 1.0;
  int n_samples = 128;
  bool cyclic_align = true;

  void validate() const;
  bool is_flat() const;
};

// Resamples to n points with equal spacing along the resampled polyline
// (every chord has the same length). Open curves keep both endpoints,
// closed curves keep the first point as the seed.
Curve resample_uniform(const Curve& curve, int n);

SrvCurve to_srv(const Curve& curve, int n);

// Inverse of to_srv; the reconstruction starts at the origin.
Curve from_srv(const SrvCurve& srv);

// L2 distance over K between two SRV sample sets of equal size and kind,
// minimised over cyclic seed shifts when params.cyclic_align is set and the
// curves are closed. Non-flat weights use the stretch/bend decomposition.
double srv_distance(const SrvCurve& a, const SrvCurve& b, const ElasticParams& params);

// Elastic dissimilarity D_EM. Both curves are scaled to unit length,
// resampled to params.n_samples points and compared in SRV space.
double elastic_distance(const Curve& a, const Curve& b, const ElasticParams& params = {});

}  // namespace emvqm
