#include "emvqm/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <opencv2/core.hpp>

#include "emvqm/error.hpp"

namespace emvqm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw EvaluationError("zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// Uniform integer in [0, range) by rejection, identical on every platform.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t range) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % range;
}

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

Correlation correlation_stats(std::span<const double> pred, std::span<const double> dmos) {
  if (pred.size() != dmos.size()) throw DataError("length mismatch");
  if (pred.size() < 3) throw DataError("need at least 3 values");
  Correlation c;
  c.pcc = pearson(pred, dmos);
  const auto rp = average_ranks(pred), rd = average_ranks(dmos);
  c.scc = pearson(rp, rd);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - dmos[i]) * (pred[i] - dmos[i]);
  c.rmse = std::sqrt(s / static_cast<double>(pred.size()));
  return c;
}

double LogisticFit::operator()(double objective) const {
  if (beta2 == 0.0) return beta1;
  return beta1 * sigmoid(beta2 * (objective - beta3));
}

double logistic_sse(const LogisticFit& fit, std::span<const double> objective, std::span<const double> dmos) {
  double s = 0.0;
  for (std::size_t i = 0; i < objective.size(); ++i) {
    const double r = fit(objective[i]) - dmos[i];
    s += r * r;
  }
  return s;
}

LogisticFit fit_logistic(std::span<const double> objective, std::span<const double> dmos) {
  if (objective.size() != dmos.size()) throw DataError("length mismatch");
  if (objective.size() < 4) throw DataError("need at least 4 points");
  const auto [omin, omax] = std::minmax_element(objective.begin(), objective.end());
  if (*omin == *omax) throw EvaluationError("degenerate fit");
  const auto [dmin, dmax] = std::minmax_element(dmos.begin(), dmos.end());
  const double obj_median = median({objective.begin(), objective.end()});
  if (*dmin == *dmax) return {*dmax, 0.0, obj_median};

  LogisticFit fit{*dmax, 1.0, obj_median};
  double sse = logistic_sse(fit, objective, dmos);
  double lambda = 1e-3;
  for (int it = 0; it < 500; ++it) {
    cv::Matx33d jtj = cv::Matx33d::zeros();
    cv::Vec3d jtr(0, 0, 0);
    for (std::size_t i = 0; i < objective.size(); ++i) {
      const double dx = objective[i] - fit.beta3;
      const double s = sigmoid(fit.beta2 * dx);
      const double ds = s * (1.0 - s);
      const cv::Vec3d j(s, fit.beta1 * ds * dx, -fit.beta1 * ds * fit.beta2);
      const double r = fit.beta1 * s - dmos[i];
      jtj += j * j.t();
      jtr += j * r;
    }
    bool accepted = false;
    while (!accepted && lambda < 1e16) {
      cv::Matx33d a = jtj;
      for (int k = 0; k < 3; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      cv::Vec3d step;
      if (!cv::solve(a, -jtr, step, cv::DECOMP_CHOLESKY)) {
        lambda *= 10.0;
        continue;
      }
      const LogisticFit trial{fit.beta1 + step[0], fit.beta2 + step[1], fit.beta3 + step[2]};
      const double trial_sse = logistic_sse(trial, objective, dmos);
      if (std::isfinite(trial_sse) && trial_sse < sse && trial.beta2 != 0.0) {
        const double rel = (sse - trial_sse) / std::max(sse, 1e-300);
        fit = trial;
        sse = trial_sse;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (rel < 1e-9) return fit;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted || sse == 0.0) break;
  }
  return fit;
}

Regressor parse_regressor(const std::string& name) {
  if (name == "svr") return Regressor::svr;
  if (name == "identity") return Regressor::identity;
  if (name == "logistic") return Regressor::logistic;
  throw ConfigError("unknown regressor " + name);
}

const char* to_string(Regressor r) {
  switch (r) {
    case Regressor::svr:
      return "svr";
    case Regressor::identity:
      return "identity";
    case Regressor::logistic:
      return "logistic";
  }
  return "?";
}

std::vector<std::size_t> fold_test_indices(std::size_t n, double train_fraction, std::uint64_t seed, int fold) {
  const auto n_test =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::llround((1.0 - train_fraction) * static_cast<double>(n))),
                              1, n - 1);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fold)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first n_test slots are the sample.
  for (std::size_t i = 0; i < n_test; ++i) std::swap(idx[i], idx[i + bounded(rng, n - i)]);
  idx.resize(n_test);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double TrainedRegressor::predict(std::span<const double> features) const {
  switch (kind) {
    case Regressor::svr:
      return svr_predict(svr, features);
    case Regressor::identity:
      if (features.empty()) throw DataError("missing objective score");
      return features[0];
    case Regressor::logistic:
      if (features.empty()) throw DataError("missing objective score");
      return logistic(features[0]);
  }
  throw ConfigError("unknown regressor");
}

TrainedRegressor train_regressor(std::span<const EvalRecord> records, Regressor kind, const SvrParams& params,
                                 bool grid_search, const SvrGrid& grid) {
  TrainedRegressor out;
  out.kind = kind;
  switch (kind) {
    case Regressor::svr: {
      std::vector<std::vector<double>> x;
      std::vector<double> y;
      for (const auto& r : records) {
        x.push_back(r.features);
        y.push_back(r.dmos);
      }
      const SvrParams p = grid_search ? select_svr_params(x, y, grid, params) : params;
      out.svr = svr_train(x, y, p);
      break;
    }
    case Regressor::identity:
      break;
    case Regressor::logistic: {
      std::vector<double> obj, y;
      for (const auto& r : records) {
        if (r.features.empty()) throw DataError("missing objective score");
        obj.push_back(r.features[0]);
        y.push_back(r.dmos);
      }
      out.logistic = fit_logistic(obj, y);
      break;
    }
  }
  return out;
}

CvResult cross_validate(std::span<const EvalRecord> records, const CvOptions& options) {
  if (options.folds < 1) throw ConfigError("folds must be positive");
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0))
    throw ConfigError("train_fraction must be in (0, 1)");
  if (options.threads < 1) throw ConfigError("threads must be positive");
  options.svr.validate();
  // Test splits need 3 values for a correlation, training splits 5 for the SVR.
  if (records.size() < 8) throw DataError("too few records for cross-validation");
  const std::size_t n_test = fold_test_indices(records.size(), options.train_fraction, options.seed, 0).size();
  if (n_test < 3 || records.size() - n_test < 5) throw DataError("too few records for cross-validation");
  const std::size_t dim = records.front().features.size();
  for (const auto& r : records) {
    if (r.features.size() != dim || dim == 0) throw DataError("feature length mismatch");
  }

  const std::size_t n = records.size();
  CvResult result;
  result.folds.resize(static_cast<std::size_t>(options.folds));

  auto run_fold = [&](int f) {
    const auto test = fold_test_indices(n, options.train_fraction, options.seed, f);
    std::vector<bool> is_test(n, false);
    for (auto i : test) is_test[i] = true;
    std::vector<EvalRecord> train;
    FoldResult& fr = result.folds[static_cast<std::size_t>(f)];
    fr.fold = f;
    for (std::size_t i = 0; i < n; ++i) {
      if (is_test[i]) {
        fr.test_ids.push_back(records[i].video_id);
      } else {
        fr.train_ids.push_back(records[i].video_id);
        train.push_back(records[i]);
      }
    }
    std::vector<double> dmos;
    try {
      const TrainedRegressor model =
          train_regressor(train, options.regressor, options.svr, options.grid_search, options.grid);
      for (auto i : test) {
        fr.test_predictions.push_back(model.predict(records[i].features));
        dmos.push_back(records[i].dmos);
      }
      const Correlation c = correlation_stats(fr.test_predictions, dmos);
      fr.pcc = c.pcc;
      fr.scc = c.scc;
      fr.rmse = c.rmse;
    } catch (const EvaluationError&) {
      // Degenerate training fit or a constant test split.
      fr.test_predictions.clear();
      fr.pcc = fr.scc = fr.rmse = kNaN;
    }
  };

  if (options.threads == 1) {
    for (int f = 0; f < options.folds; ++f) run_fold(f);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < options.threads; ++t) {
      pool.emplace_back([&] {
        for (int f = next++; f < options.folds; f = next++) {
          try {
            run_fold(f);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  std::vector<double> pcc, scc, rmse;
  for (const auto& fr : result.folds) {
    if (std::isnan(fr.pcc)) {
      ++result.summary.skipped;
      continue;
    }
    pcc.push_back(fr.pcc);
    scc.push_back(fr.scc);
    rmse.push_back(fr.rmse);
  }
  if (pcc.empty()) throw EvaluationError("no fold produced defined statistics");
  CvSummary& s = result.summary;
  s.folds = options.folds;
  s.pcc_median = median(pcc);
  s.scc_median = median(scc);
  s.rmse_median = median(rmse);
  s.pcc_mean = mean_of(pcc);
  s.scc_mean = mean_of(scc);
  s.rmse_mean = mean_of(rmse);
  return result;
}

std::vector<PairLabel> dmos_pair_labels(std::span<const double> dmos, std::span<const double> dmos_stderr,
                                        double z_critical) {
  if (dmos.size() != dmos_stderr.size()) throw DataError("length mismatch");
  for (double s : dmos_stderr)
    if (!(s >= 0.0)) throw DataError("missing dmos_stderr");
  std::vector<PairLabel> out;
  for (std::size_t a = 0; a < dmos.size(); ++a) {
    for (std::size_t b = a + 1; b < dmos.size(); ++b) {
      const double diff = dmos[a] - dmos[b];
      const double se = std::hypot(dmos_stderr[a], dmos_stderr[b]);
      const bool sig = se > 0.0 ? std::abs(diff) / se >= z_critical : diff != 0.0;
      out.push_back({a, b, sig, sig ? (diff > 0.0 ? 1 : -1) : 0});
    }
  }
  return out;
}

double roc_auc(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty()) return kNaN;
  std::vector<double> all(positive.begin(), positive.end());
  all.insert(all.end(), negative.begin(), negative.end());
  const auto ranks = average_ranks(all);
  double r = 0.0;
  for (std::size_t i = 0; i < positive.size(); ++i) r += ranks[i];
  const double np = static_cast<double>(positive.size()), nn = static_cast<double>(negative.size());
  return (r - np * (np + 1.0) / 2.0) / (np * nn);
}

KrasulaAuc krasula_auc(std::span<const double> objective, std::span<const PairLabel> pairs) {
  std::vector<double> diff_sig, diff_sim, better, worse;
  for (const auto& p : pairs) {
    if (p.a >= objective.size() || p.b >= objective.size()) throw DataError("pair index out of range");
    const double d = objective[p.a] - objective[p.b];
    if (p.significant) {
      diff_sig.push_back(std::abs(d));
      better.push_back(p.sign * d);
      worse.push_back(-p.sign * d);
    } else {
      diff_sim.push_back(std::abs(d));
    }
  }
  if (better.empty()) throw EvaluationError("no discriminable pairs");
  return {roc_auc(diff_sig, diff_sim), roc_auc(better, worse)};
}

Orientation parse_orientation(const std::string& name) {
  if (name == "higher") return Orientation::higher_better;
  if (name == "lower") return Orientation::lower_better;
  throw ConfigError("orientation must be higher or lower");
}

std::vector<GroupRank> rank_groups(std::span<const std::string> groups, std::span<const double> scores,
                                   Orientation orientation) {
  if (groups.size() != scores.size()) throw DataError("length mismatch");
  std::map<std::string, GroupRank> by_name;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].empty()) throw DataError("empty group");
    auto& g = by_name[groups[i]];
    g.group = groups[i];
    g.mean += scores[i];
    ++g.count;
  }
  std::vector<GroupRank> out;
  for (auto& [name, g] : by_name) {
    g.mean /= static_cast<double>(g.count);
    out.push_back(g);
  }
  std::stable_sort(out.begin(), out.end(), [orientation](const GroupRank& a, const GroupRank& b) {
    return orientation == Orientation::higher_better ? a.mean > b.mean : a.mean < b.mean;
  });
  return out;
}

TTest two_sample_t_test(std::span<const double> a, std::span<const double> b, bool welch) {
  if (a.size() < 2 || b.size() < 2) throw DataError("t-test needs at least 2 values per sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean_of(a), mb = mean_of(b), va = variance_of(a), vb = variance_of(b);
  TTest r;
  double se2;
  if (welch) {
    se2 = va / na + vb / nb;
    const double num = se2 * se2;
    const double den = (va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0);
    r.df = den > 0.0 ? num / den : na + nb - 2.0;
  } else {
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    se2 = pooled * (1.0 / na + 1.0 / nb);
    r.df = na + nb - 2.0;
  }
  if (se2 == 0.0) {
    r.t = ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
    r.p = ma == mb ? 1.0 : 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  const boost::math::students_t dist(r.df);
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

std::vector<std::vector<int>> significance_matrix(std::span<const std::vector<double>> fold_pcc, double alpha,
                                                  bool welch) {
  if (fold_pcc.size() < 2) throw DataError("need at least 2 metrics");
  for (const auto& f : fold_pcc)
    if (f.size() != fold_pcc.front().size()) throw DataError("fold counts differ");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
  const std::size_t m = fold_pcc.size();
  std::vector<std::vector<int>> out(m, std::vector<int>(m, 0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const TTest t = two_sample_t_test(fold_pcc[i], fold_pcc[j], welch);
      const int v = t.p < alpha ? (t.t > 0.0 ? 1 : -1) : 0;
      out[i][j] = v;
      out[j][i] = -v;
    }
  }
  return out;
}

}  // namespace emvqm
