#include "emvqm/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "emvqm/error.hpp"

namespace emvqm {

void SvrParams::validate() const {
  if (!(c > 0.0)) throw ConfigError("svr C must be positive");
  if (!(epsilon >= 0.0)) throw ConfigError("svr epsilon must be non-negative");
  if (!(tolerance > 0.0)) throw ConfigError("svr tolerance must be positive");
  if (max_epochs < 1) throw ConfigError("svr max_epochs must be positive");
}

namespace {

double scale_value(double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; }

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void check_rows(FeatureRows features, std::size_t targets) {
  if (features.size() != targets) throw DataError("feature and target counts differ");
  if (features.size() < 5) throw DataError("insufficient training data");
  const std::size_t d = features.front().size();
  if (d == 0) throw DataError("empty feature vector");
  for (const auto& row : features) {
    if (row.size() != d) throw DataError("feature length mismatch");
    for (double v : row)
      if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
}

}  // namespace

SvrModel svr_train(FeatureRows features, std::span<const double> targets, const SvrParams& params,
                   std::vector<double>* trace) {
  params.validate();
  check_rows(features, targets.size());
  for (double t : targets)
    if (!std::isfinite(t)) throw DataError("non-finite target");
  const std::size_t n = features.size(), d = features.front().size();

  SvrModel m;
  m.c = params.c;
  m.epsilon = params.epsilon;
  m.scale_min.assign(d, std::numeric_limits<double>::infinity());
  m.scale_max.assign(d, -std::numeric_limits<double>::infinity());
  for (const auto& row : features)
    for (std::size_t j = 0; j < d; ++j) {
      m.scale_min[j] = std::min(m.scale_min[j], row[j]);
      m.scale_max[j] = std::max(m.scale_max[j], row[j]);
    }
  const double y_mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);

  std::vector<double> center(d, 0.0);
  for (const auto& row : features)
    for (std::size_t j = 0; j < d; ++j) center[j] += scale_value(row[j], m.scale_min[j], m.scale_max[j]);
  for (double& v : center) v /= static_cast<double>(n);

  // Centred scaled rows with a trailing 1 for the bias. A repeated (x, y)
  // sample carries no new information and is kept once.
  std::vector<std::vector<double>> z;
  std::vector<double> y, upper;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d + 1, 1.0);
    for (std::size_t j = 0; j < d; ++j) row[j] = scale_value(features[i][j], m.scale_min[j], m.scale_max[j]) - center[j];
    const double yi = targets[i] - y_mean;
    std::size_t k = 0;
    while (k < z.size() && !(z[k] == row && y[k] == yi)) ++k;
    if (k == z.size()) {
      z.push_back(std::move(row));
      y.push_back(yi);
      upper.push_back(0.0);
    }
    upper[k] = params.c;
  }
  const std::size_t u = z.size();
  std::vector<double> q(u);
  for (std::size_t i = 0; i < u; ++i) q[i] = dot(z[i], z[i]);

  std::vector<double> beta(u, 0.0), w(d + 1, 0.0);
  const double eps = params.epsilon;
  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < u; ++i) {
      // Exact minimiser along beta_i: soft threshold of the Newton point, then the box.
      const double g = dot(w, z[i]) - y[i];
      const double t = beta[i] - g / q[i];
      double v = std::copysign(std::max(std::abs(t) - eps / q[i], 0.0), t);
      v = std::clamp(v, -upper[i], upper[i]);
      const double delta = v - beta[i];
      if (delta != 0.0) {
        for (std::size_t j = 0; j <= d; ++j) w[j] += delta * z[i][j];
        beta[i] = v;
      }
    }
    const double half_ww = 0.5 * dot(w, w);
    double dual = half_ww, primal = half_ww;
    for (std::size_t i = 0; i < u; ++i) {
      dual += -y[i] * beta[i] + eps * std::abs(beta[i]);
      primal += upper[i] * std::max(0.0, std::abs(y[i] - dot(w, z[i])) - eps);
    }
    if (trace) trace->push_back(dual);
    if (primal + dual <= params.tolerance * std::max(1.0, std::abs(primal))) break;
  }

  m.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
  m.bias = y_mean + w[d] - dot(std::span<const double>(w.data(), d), center);
  return m;
}

double svr_predict(const SvrModel& model, std::span<const double> features) {
  if (features.size() != model.weights.size()) throw DataError("feature length mismatch");
  double s = model.bias;
  for (std::size_t j = 0; j < features.size(); ++j) {
    const double v = std::clamp(scale_value(features[j], model.scale_min[j], model.scale_max[j]), -0.5, 1.5);
    s += model.weights[j] * v;
  }
  return s;
}

SvrParams select_svr_params(FeatureRows features, std::span<const double> targets, const SvrGrid& grid,
                            const SvrParams& base) {
  check_rows(features, targets.size());
  if (grid.folds < 2) throw ConfigError("grid search needs at least 2 folds");
  const std::size_t n = features.size(), k = static_cast<std::size_t>(grid.folds);
  // Every inner training split must still be trainable.
  if (n - (n + k - 1) / k < 5) return base;

  SvrParams best = base;
  double best_rmse = std::numeric_limits<double>::infinity();
  for (double c : grid.c) {
    for (double e : grid.epsilon) {
      SvrParams p = base;
      p.c = c;
      p.epsilon = e;
      double sse = 0.0;
      for (std::size_t f = 0; f < k; ++f) {
        const std::size_t lo = f * n / k, hi = (f + 1) * n / k;
        std::vector<std::vector<double>> tx;
        std::vector<double> ty;
        for (std::size_t i = 0; i < n; ++i) {
          if (i >= lo && i < hi) continue;
          tx.push_back(features[i]);
          ty.push_back(targets[i]);
        }
        const SvrModel m = svr_train(tx, ty, p);
        for (std::size_t i = lo; i < hi; ++i) {
          const double r = svr_predict(m, features[i]) - targets[i];
          sse += r * r;
        }
      }
      const double rmse = std::sqrt(sse / static_cast<double>(n));
      if (rmse < best_rmse) {
        best_rmse = rmse;
        best = p;
      }
    }
  }
  return best;
}

}  // namespace emvqm
