#include "emvqm/superpixels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include "emvqm/error.hpp"

namespace emvqm {

namespace {

struct Center {
  double x, y, l;
};

double gradient_at(const cv::Mat& img, int x, int y) {
  const int x0 = std::max(x - 1, 0), x1 = std::min(x + 1, img.cols - 1);
  const int y0 = std::max(y - 1, 0), y1 = std::min(y + 1, img.rows - 1);
  const double gx = img.at<double>(y, x1) - img.at<double>(y, x0);
  const double gy = img.at<double>(y1, x) - img.at<double>(y0, x);
  return gx * gx + gy * gy;
}

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
};

// Splits every label into 4-connected components, keeps the largest component
// of each label and merges the rest (smallest first) into the largest adjacent
// segment. Relabels in raster order.
int enforce_connectivity(cv::Mat& labels) {
  const int rows = labels.rows, cols = labels.cols;
  cv::Mat seg(rows, cols, CV_32S, cv::Scalar(-1));
  std::vector<int> seg_label, seg_size;
  std::vector<cv::Point> stack;
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      if (seg.at<int>(y, x) >= 0) continue;
      const int id = static_cast<int>(seg_label.size());
      const int lab = labels.at<int>(y, x);
      int size = 0;
      stack.assign(1, {x, y});
      seg.at<int>(y, x) = id;
      while (!stack.empty()) {
        const cv::Point p = stack.back();
        stack.pop_back();
        ++size;
        const cv::Point nb[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
        for (const auto& q : nb) {
          if (q.x < 0 || q.y < 0 || q.x >= cols || q.y >= rows) continue;
          if (seg.at<int>(q) >= 0 || labels.at<int>(q) != lab) continue;
          seg.at<int>(q) = id;
          stack.push_back(q);
        }
      }
      seg_label.push_back(lab);
      seg_size.push_back(size);
    }
  }

  const int nseg = static_cast<int>(seg_label.size());
  std::vector<std::set<int>> adj(nseg);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const int a = seg.at<int>(y, x);
      if (x + 1 < cols && seg.at<int>(y, x + 1) != a) {
        adj[a].insert(seg.at<int>(y, x + 1));
        adj[seg.at<int>(y, x + 1)].insert(a);
      }
      if (y + 1 < rows && seg.at<int>(y + 1, x) != a) {
        adj[a].insert(seg.at<int>(y + 1, x));
        adj[seg.at<int>(y + 1, x)].insert(a);
      }
    }
  }

  // Largest segment per label stays; ties go to the earlier segment.
  std::vector<int> keeper;
  for (int s = 0; s < nseg; ++s) {
    const int lab = seg_label[s];
    if (lab >= static_cast<int>(keeper.size())) keeper.resize(lab + 1, -1);
    if (keeper[lab] < 0 || seg_size[s] > seg_size[keeper[lab]]) keeper[lab] = s;
  }
  std::vector<int> orphans;
  for (int s = 0; s < nseg; ++s)
    if (keeper[seg_label[s]] != s) orphans.push_back(s);
  std::sort(orphans.begin(), orphans.end(),
            [&](int a, int b) { return std::tie(seg_size[a], a) < std::tie(seg_size[b], b); });

  DisjointSet ds(nseg);
  std::vector<int> group_size = seg_size;
  for (int o : orphans) {
    const int root = ds.find(o);
    int target = -1;
    for (int n : adj[root]) {
      const int r = ds.find(n);
      if (r == root) continue;
      if (target < 0 || group_size[r] > group_size[target] || (group_size[r] == group_size[target] && r < target))
        target = r;
    }
    if (target < 0) continue;
    ds.parent[root] = target;
    group_size[target] += group_size[root];
    adj[target].insert(adj[root].begin(), adj[root].end());
    adj[root].clear();
  }

  std::vector<int> final_id(nseg, -1);
  int count = 0;
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const int r = ds.find(seg.at<int>(y, x));
      if (final_id[r] < 0) final_id[r] = count++;
      labels.at<int>(y, x) = final_id[r];
    }
  }
  return count;
}

// Moore neighbourhood, clockwise on screen starting west.
const std::array<cv::Point, 8> kMoore = {
    cv::Point{-1, 0}, cv::Point{-1, -1}, cv::Point{0, -1}, cv::Point{1, -1},
    cv::Point{1, 0},  cv::Point{1, 1},   cv::Point{0, 1},  cv::Point{-1, 1}};

int moore_index(cv::Point d) {
  for (int i = 0; i < 8; ++i)
    if (kMoore[i] == d) return i;
  return -1;
}

std::vector<cv::Point> trace_boundary(const cv::Mat& labels, int label, cv::Point start) {
  auto inside = [&](cv::Point p) {
    return p.x >= 0 && p.y >= 0 && p.x < labels.cols && p.y < labels.rows && labels.at<int>(p) == label;
  };
  std::vector<cv::Point> pts{start};
  cv::Point c = start;
  int back = 0;  // west of the start pixel is outside the region
  const std::size_t limit = 4 * static_cast<std::size_t>(labels.total()) + 8;
  while (pts.size() < limit) {
    int found = -1;
    for (int k = 1; k <= 8; ++k) {
      const int d = (back + k) % 8;
      if (inside(c + kMoore[d])) {
        found = d;
        break;
      }
    }
    if (found < 0) break;  // isolated pixel
    const cv::Point n = c + kMoore[found];
    if (c == start && pts.size() > 1 && n == pts[1]) {
      pts.pop_back();  // the start pixel, reached a second time
      break;
    }
    const cv::Point prev = c + kMoore[(found + 7) % 8];
    back = moore_index(prev - n);
    c = n;
    pts.push_back(c);
  }
  return pts;
}

}  // namespace

SuperpixelLabeling slic_segment(const cv::Mat& patch, int k, double compactness, int iterations) {
  if (patch.empty() || patch.type() != CV_8UC1) throw DataError("superpixel input must be 8-bit grayscale");
  if (k < 1) throw ConfigError("superpixel count must be positive");
  if (!(compactness > 0.0)) throw ConfigError("compactness must be positive");
  if (iterations < 1) throw ConfigError("iterations must be positive");
  const int rows = patch.rows, cols = patch.cols;
  if (static_cast<long long>(k) > static_cast<long long>(rows) * cols) throw DataError("too many superpixels");

  cv::Mat img;
  patch.convertTo(img, CV_64F);

  const int nx = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(k) * cols / rows))));
  const int ny = std::max(1, static_cast<int>(std::lround(static_cast<double>(k) / nx)));
  std::vector<Center> centers;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int x = std::min(cols - 1, static_cast<int>((i + 0.5) * cols / nx));
      int y = std::min(rows - 1, static_cast<int>((j + 0.5) * rows / ny));
      double best = gradient_at(img, x, y);
      int bx = x, by = y;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= cols || yy >= rows) continue;
          const double g = gradient_at(img, xx, yy);
          if (g < best) {
            best = g;
            bx = xx;
            by = yy;
          }
        }
      }
      centers.push_back({static_cast<double>(bx), static_cast<double>(by), img.at<double>(by, bx)});
    }
  }

  const double S = std::sqrt(static_cast<double>(rows) * cols / k);
  const int reach = static_cast<int>(std::ceil(S));
  const double spatial_w = (compactness / S) * (compactness / S);
  cv::Mat labels(rows, cols, CV_32S);
  cv::Mat dist(rows, cols, CV_64F);
  for (int it = 0; it < iterations; ++it) {
    labels.setTo(-1);
    dist.setTo(std::numeric_limits<double>::infinity());
    for (int c = 0; c < static_cast<int>(centers.size()); ++c) {
      const Center& ct = centers[c];
      const int x0 = std::max(0, static_cast<int>(std::floor(ct.x)) - reach);
      const int x1 = std::min(cols - 1, static_cast<int>(std::ceil(ct.x)) + reach);
      const int y0 = std::max(0, static_cast<int>(std::floor(ct.y)) - reach);
      const int y1 = std::min(rows - 1, static_cast<int>(std::ceil(ct.y)) + reach);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double dl = img.at<double>(y, x) - ct.l;
          const double dx = x - ct.x, dy = y - ct.y;
          const double d = dl * dl + (dx * dx + dy * dy) * spatial_w;
          if (d < dist.at<double>(y, x)) {
            dist.at<double>(y, x) = d;
            labels.at<int>(y, x) = c;
          }
        }
      }
    }
    // Pixels outside every search window go to the spatially nearest center.
    for (int y = 0; y < rows; ++y) {
      for (int x = 0; x < cols; ++x) {
        if (labels.at<int>(y, x) >= 0) continue;
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < static_cast<int>(centers.size()); ++c) {
          const double d = (x - centers[c].x) * (x - centers[c].x) + (y - centers[c].y) * (y - centers[c].y);
          if (d < best) {
            best = d;
            labels.at<int>(y, x) = c;
          }
        }
      }
    }
    std::vector<Center> sum(centers.size(), {0, 0, 0});
    std::vector<int> n(centers.size(), 0);
    for (int y = 0; y < rows; ++y) {
      for (int x = 0; x < cols; ++x) {
        const int c = labels.at<int>(y, x);
        sum[c].x += x;
        sum[c].y += y;
        sum[c].l += img.at<double>(y, x);
        ++n[c];
      }
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (n[c] == 0) continue;
      centers[c] = {sum[c].x / n[c], sum[c].y / n[c], sum[c].l / n[c]};
    }
  }

  SuperpixelLabeling out;
  out.k = k;
  out.compactness = compactness;
  out.count = enforce_connectivity(labels);
  out.labels = labels;
  return out;
}

std::vector<RegionStats> region_stats(const SuperpixelLabeling& labeling) {
  std::vector<RegionStats> stats(labeling.count);
  std::vector<double> sx(labeling.count, 0.0), sy(labeling.count, 0.0);
  for (int y = 0; y < labeling.labels.rows; ++y) {
    for (int x = 0; x < labeling.labels.cols; ++x) {
      const int l = labeling.labels.at<int>(y, x);
      if (l < 0 || l >= labeling.count) throw DataError("label out of range");
      ++stats[l].area;
      sx[l] += x;
      sy[l] += y;
    }
  }
  for (int l = 0; l < labeling.count; ++l) {
    stats[l].label = l;
    if (stats[l].area > 0) stats[l].centroid = {sx[l] / stats[l].area, sy[l] / stats[l].area};
  }
  return stats;
}

std::vector<LabelContour> extract_contours(const SuperpixelLabeling& labeling) {
  const cv::Mat& labels = labeling.labels;
  if (labels.empty() || labels.type() != CV_32S) throw DataError("invalid label map");
  std::vector<cv::Point> first(labeling.count, {-1, -1});
  for (int y = 0; y < labels.rows; ++y) {
    for (int x = 0; x < labels.cols; ++x) {
      const int l = labels.at<int>(y, x);
      if (l < 0 || l >= labeling.count) throw DataError("label out of range");
      if (first[l].x < 0) first[l] = {x, y};
    }
  }
  std::vector<LabelContour> out;
  for (int l = 0; l < labeling.count; ++l) {
    if (first[l].x < 0) continue;
    auto pts = trace_boundary(labels, l, first[l]);
    if (pts.size() < 3) continue;
    // The trace runs clockwise on screen; reverse it but keep the start pixel.
    std::reverse(pts.begin() + 1, pts.end());
    std::vector<Point2> curve;
    curve.reserve(pts.size());
    for (const auto& p : pts) curve.emplace_back(p.x, p.y);
    out.push_back({l, Curve(std::move(curve), true)});
  }
  return out;
}

CurvePairSet match_superpixels(const SuperpixelLabeling& ref, const SuperpixelLabeling& syn, double gate) {
  if (ref.labels.size() != syn.labels.size()) throw DataError("patch size mismatch");
  const double diag = std::hypot(ref.labels.cols, ref.labels.rows);
  const auto ref_stats = region_stats(ref);
  const auto syn_stats = region_stats(syn);
  auto usable = [](std::vector<LabelContour> contours) {
    std::erase_if(contours, [](const LabelContour& c) { return c.contour.size() < kMinContourPoints; });
    return contours;
  };
  const auto rc = usable(extract_contours(ref));
  const auto sc = usable(extract_contours(syn));

  struct Candidate {
    double cost;
    std::size_t i, j;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < rc.size(); ++i) {
    const RegionStats& a = ref_stats[rc[i].label];
    for (std::size_t j = 0; j < sc.size(); ++j) {
      const RegionStats& b = syn_stats[sc[j].label];
      const Point2 d = a.centroid - b.centroid;
      const double dist = std::hypot(d.x, d.y);
      if (dist > gate * diag) continue;
      const double area_term = std::abs(a.area - b.area) / static_cast<double>(std::max(a.area, b.area)) * diag;
      cands.push_back({dist + area_term, i, j});
    }
  }
  std::sort(cands.begin(), cands.end(),
            [](const Candidate& a, const Candidate& b) { return std::tie(a.cost, a.i, a.j) < std::tie(b.cost, b.i, b.j); });

  CurvePairSet out;
  std::vector<bool> used_r(rc.size(), false), used_s(sc.size(), false);
  for (const auto& c : cands) {
    if (used_r[c.i] || used_s[c.j]) continue;
    used_r[c.i] = used_s[c.j] = true;
    out.pairs.push_back({rc[c.i].label, sc[c.j].label, rc[c.i].contour, sc[c.j].contour, c.cost});
  }
  return out;
}

}  // namespace emvqm
