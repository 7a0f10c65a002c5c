#include "emvqm/keypoints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <opencv2/imgproc.hpp>

#include "emvqm/error.hpp"

namespace emvqm {

namespace {

constexpr int kIntervals = 4;

class IntegralImage {
 public:
  // The frame is mirrored by pad pixels on each side so that large filters
  // stay defined up to the frame border.
  IntegralImage(const cv::Mat& gray, int pad) : rows_(gray.rows), cols_(gray.cols), pad_(pad) {
    cv::Mat padded;
    cv::copyMakeBorder(gray, padded, pad, pad, pad, pad, cv::BORDER_REFLECT_101);
    cv::integral(padded, sum_, CV_64F);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  // Sum over [row, row + h) x [col, col + w) in frame coordinates, clipped to
  // the padded image, in [0, 1] units.
  double box(int row, int col, int h, int w) const {
    const int r0 = std::clamp(row + pad_, 0, rows_ + 2 * pad_);
    const int c0 = std::clamp(col + pad_, 0, cols_ + 2 * pad_);
    const int r1 = std::clamp(row + h + pad_, 0, rows_ + 2 * pad_);
    const int c1 = std::clamp(col + w + pad_, 0, cols_ + 2 * pad_);
    if (r1 <= r0 || c1 <= c0) return 0.0;
    const double s = sum_.at<double>(r1, c1) - sum_.at<double>(r0, c1) - sum_.at<double>(r1, c0) +
                     sum_.at<double>(r0, c0);
    return s / 255.0;
  }

 private:
  int rows_;
  int cols_;
  int pad_;
  cv::Mat sum_;
};

struct Layer {
  int filter = 0;  // box filter side length
  int step = 1;    // sampling step in pixels
  int rows = 0;
  int cols = 0;
  std::vector<double> response;  // signed det H

  double at(int r, int c) const { return response[static_cast<std::size_t>(r) * cols + c]; }
};

Layer build_layer(const IntegralImage& img, int filter, int step) {
  Layer layer;
  layer.filter = filter;
  layer.step = step;
  layer.rows = img.rows() / step;
  layer.cols = img.cols() / step;
  layer.response.assign(static_cast<std::size_t>(layer.rows) * layer.cols, 0.0);

  const int lobe = filter / 3;
  const int border = (filter - 1) / 2;
  const double inv_area = 1.0 / (static_cast<double>(filter) * filter);
  for (int i = 0; i < layer.rows; ++i) {
    const int r = i * step;
    for (int j = 0; j < layer.cols; ++j) {
      const int c = j * step;
      const double dxx = img.box(r - lobe + 1, c - border, 2 * lobe - 1, filter) -
                         3.0 * img.box(r - lobe + 1, c - lobe / 2, 2 * lobe - 1, lobe);
      const double dyy = img.box(r - border, c - lobe + 1, filter, 2 * lobe - 1) -
                         3.0 * img.box(r - lobe / 2, c - lobe + 1, lobe, 2 * lobe - 1);
      const double dxy = img.box(r - lobe, c + 1, lobe, lobe) + img.box(r + 1, c - lobe, lobe, lobe) -
                         img.box(r - lobe, c - lobe, lobe, lobe) - img.box(r + 1, c + 1, lobe, lobe);
      const double nxx = dxx * inv_area;
      const double nyy = dyy * inv_area;
      const double nxy = dxy * inv_area;
      layer.response[static_cast<std::size_t>(i) * layer.cols + j] = nxx * nyy - 0.81 * nxy * nxy;
    }
  }
  return layer;
}

double haar_x(const IntegralImage& img, int row, int col, int size) {
  const int h = size / 2;
  return img.box(row - h, col, size, h) - img.box(row - h, col - h, size, h);
}

double haar_y(const IntegralImage& img, int row, int col, int size) {
  const int h = size / 2;
  return img.box(row, col - h, h, size) - img.box(row - h, col - h, h, size);
}

bool describe(const IntegralImage& img, Keypoint& kp) {
  const double s = kp.scale;
  const int haar = std::max(2, 2 * static_cast<int>(std::lround(s)));
  const double sigma = 3.3 * s;
  double norm2 = 0.0;
  for (int cy = 0; cy < 4; ++cy) {
    for (int cx = 0; cx < 4; ++cx) {
      double sdx = 0, sadx = 0, sdy = 0, sady = 0;
      for (int ky = 0; ky < 5; ++ky) {
        for (int kx = 0; kx < 5; ++kx) {
          const double u = (-10.0 + 5.0 * cx + kx + 0.5) * s;
          const double v = (-10.0 + 5.0 * cy + ky + 0.5) * s;
          const int col = static_cast<int>(std::lround(kp.position.x + u));
          const int row = static_cast<int>(std::lround(kp.position.y + v));
          const double w = std::exp(-(u * u + v * v) / (2.0 * sigma * sigma));
          const double dx = w * haar_x(img, row, col, haar);
          const double dy = w * haar_y(img, row, col, haar);
          sdx += dx;
          sadx += std::abs(dx);
          sdy += dy;
          sady += std::abs(dy);
        }
      }
      const std::size_t base = static_cast<std::size_t>(cy * 4 + cx) * 4;
      kp.descriptor[base + 0] = sdx;
      kp.descriptor[base + 1] = sadx;
      kp.descriptor[base + 2] = sdy;
      kp.descriptor[base + 3] = sady;
      norm2 += sdx * sdx + sadx * sadx + sdy * sdy + sady * sady;
    }
  }
  if (!(norm2 > 0.0)) return false;
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& d : kp.descriptor) d *= inv;
  return true;
}

// Quadratic refinement of an extremum of |det H| in (x, y, layer).
void refine(const Layer& below, const Layer& mid, const Layer& above, int r, int c, double& ox, double& oy,
            double& os) {
  auto v = [](double x) { return std::abs(x); };
  const double c0 = v(mid.at(r, c));
  const double dx = 0.5 * (v(mid.at(r, c + 1)) - v(mid.at(r, c - 1)));
  const double dy = 0.5 * (v(mid.at(r + 1, c)) - v(mid.at(r - 1, c)));
  const double ds = 0.5 * (v(above.at(r, c)) - v(below.at(r, c)));
  const double dxx = v(mid.at(r, c + 1)) + v(mid.at(r, c - 1)) - 2.0 * c0;
  const double dyy = v(mid.at(r + 1, c)) + v(mid.at(r - 1, c)) - 2.0 * c0;
  const double dss = v(above.at(r, c)) + v(below.at(r, c)) - 2.0 * c0;
  const double dxy = 0.25 * (v(mid.at(r + 1, c + 1)) - v(mid.at(r + 1, c - 1)) - v(mid.at(r - 1, c + 1)) +
                             v(mid.at(r - 1, c - 1)));
  const double dxs = 0.25 * (v(above.at(r, c + 1)) - v(above.at(r, c - 1)) - v(below.at(r, c + 1)) +
                             v(below.at(r, c - 1)));
  const double dys = 0.25 * (v(above.at(r + 1, c)) - v(above.at(r - 1, c)) - v(below.at(r + 1, c)) +
                             v(below.at(r - 1, c)));
  ox = oy = os = 0.0;
  cv::Matx33d h(dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss);
  cv::Vec3d off;
  if (std::abs(cv::determinant(h)) > 1e-30 && cv::solve(h, cv::Vec3d(-dx, -dy, -ds), off, cv::DECOMP_LU) &&
      std::abs(off[0]) <= 1.0 && std::abs(off[1]) <= 1.0 && std::abs(off[2]) <= 1.0) {
    ox = off[0];
    oy = off[1];
    os = off[2];
    return;
  }
  // Flat in scale (plateau): refine position only.
  const double det2 = dxx * dyy - dxy * dxy;
  if (std::abs(det2) > 1e-30) {
    const double px = -(dyy * dx - dxy * dy) / det2;
    const double py = -(dxx * dy - dxy * dx) / det2;
    if (std::abs(px) <= 1.0 && std::abs(py) <= 1.0) {
      ox = px;
      oy = py;
    }
  }
}

}  // namespace

std::vector<Keypoint> detect_keypoints(const cv::Mat& frame, const KeypointConfig& config) {
  if (frame.empty() || frame.type() != CV_8UC1) throw DataError("keypoint detection needs an 8-bit grayscale frame");
  if (frame.rows < 64 || frame.cols < 64) throw DataError("frame below minimum size");
  if (config.octaves < 1 || config.octaves > 6) throw ConfigError("octaves out of range");

  // Largest filter half-width plus the descriptor reach of the largest scale.
  const int max_filter = 3 * ((1 << config.octaves) * kIntervals + 1);
  const int pad = std::min({max_filter / 2 + 2 + static_cast<int>(std::ceil(11.0 * 1.2 * max_filter / 9.0)),
                            frame.rows - 1, frame.cols - 1});
  const IntegralImage img(frame, pad);
  std::vector<std::vector<Layer>> octaves;
  double max_response = 0.0;
  for (int o = 0; o < config.octaves; ++o) {
    std::vector<Layer> layers;
    const int step = 1 << o;
    for (int i = 0; i < kIntervals; ++i) {
      const int filter = 3 * ((1 << (o + 1)) * (i + 1) + 1);
      layers.push_back(build_layer(img, filter, step));
      for (double r : layers.back().response) {
        max_response = std::max(max_response, std::abs(r));
      }
    }
    octaves.push_back(std::move(layers));
  }

  const double threshold = std::max(config.relative_threshold * max_response, config.min_response);
  std::vector<Keypoint> keypoints;
  if (!(max_response > config.min_response)) return keypoints;

  for (int o = 0; o < config.octaves; ++o) {
    const auto& layers = octaves[o];
    const int filter_step = 6 * (1 << o);
    for (int li = 1; li + 1 < kIntervals; ++li) {
      const Layer& below = layers[li - 1];
      const Layer& mid = layers[li];
      const Layer& above = layers[li + 1];
      for (int r = 1; r + 1 < mid.rows; ++r) {
        for (int c = 1; c + 1 < mid.cols; ++c) {
          const double v = std::abs(mid.at(r, c));
          if (v <= threshold) continue;
          bool is_max = true;
          for (int dl = -1; dl <= 1 && is_max; ++dl) {
            const Layer& layer = layers[li + dl];
            for (int dr = -1; dr <= 1 && is_max; ++dr) {
              for (int dc = -1; dc <= 1; ++dc) {
                if (dl == 0 && dr == 0 && dc == 0) continue;
                const double a = std::abs(layer.at(r + dr, c + dc));
                // Strict in space; across scale ties go to the finer layer.
                const bool beaten = (dl == 0) ? a >= v : (dl < 0 ? a >= v : a > v);
                if (beaten) {
                  is_max = false;
                  break;
                }
              }
            }
          }
          if (!is_max) continue;

          double ox, oy, os;
          refine(below, mid, above, r, c, ox, oy, os);
          Keypoint kp;
          kp.position = Point2((c + ox) * mid.step, (r + oy) * mid.step);
          if (kp.position.x < 0 || kp.position.y < 0 || kp.position.x > frame.cols - 1 ||
              kp.position.y > frame.rows - 1) {
            continue;
          }
          const double filter = mid.filter + os * filter_step;
          kp.scale = 1.2 * filter / 9.0;
          kp.response = v;
          if (describe(img, kp)) keypoints.push_back(kp);
        }
      }
    }
  }
  return keypoints;
}

std::vector<KeypointMatch> match_keypoints(std::span<const Keypoint> ref, std::span<const Keypoint> syn,
                                           const MatchConfig& config) {
  std::vector<KeypointMatch> matches;
  if (ref.empty() || syn.empty()) return matches;

  const double max_d2 = config.max_disparity * config.max_disparity;
  auto within = [&](const Keypoint& a, const Keypoint& b) {
    const Point2 d = a.position - b.position;
    return d.dot(d) <= max_d2;
  };
  auto desc_dist2 = [](const Keypoint& a, const Keypoint& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.descriptor.size(); ++k) {
      const double d = a.descriptor[k] - b.descriptor[k];
      s += d * d;
    }
    return s;
  };

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  // Best ref for every syn keypoint (mutual check).
  std::vector<std::size_t> syn_best(syn.size(), kNone);
  for (std::size_t j = 0; j < syn.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (!within(ref[i], syn[j])) continue;
      const double d = desc_dist2(ref[i], syn[j]);
      if (d < best) {
        best = d;
        syn_best[j] = i;
      }
    }
  }

  const double ratio2 = config.ratio * config.ratio;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    std::size_t best_j = kNone;
    for (std::size_t j = 0; j < syn.size(); ++j) {
      if (!within(ref[i], syn[j])) continue;
      const double d = desc_dist2(ref[i], syn[j]);
      if (d < best) {
        second = best;
        best = d;
        best_j = j;
      } else if (d < second) {
        second = d;
      }
    }
    if (best_j == kNone) continue;
    if (std::isfinite(second) && !(best < ratio2 * second)) continue;
    if (syn_best[best_j] != i) continue;
    matches.push_back({i, best_j});
  }
  return matches;
}

}  // namespace emvqm
