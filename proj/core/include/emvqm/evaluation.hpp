#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emvqm/svr.hpp"

namespace emvqm {

struct Correlation {
  double pcc = 0.0;
  double scc = 0.0;
  double rmse = 0.0;
};

// Pearson and RMSE on raw values, Spearman on average ranks.
Correlation correlation_stats(std::span<const double> pred, std::span<const double> dmos);

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

double median(std::vector<double> v);

// dmos ~ beta1 / (1 + exp(-beta2 (obj - beta3))). beta2 = 0 marks the flat
// fit returned for constant dmos; it maps everything to beta1.
struct LogisticFit {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;

  double operator()(double objective) const;
};

double logistic_sse(const LogisticFit& fit, std::span<const double> objective, std::span<const double> dmos);

// Levenberg-Marquardt from beta1 = max(dmos), beta2 = 1, beta3 = median(obj).
LogisticFit fit_logistic(std::span<const double> objective, std::span<const double> dmos);

struct EvalRecord {
  std::string video_id;
  std::string group;
  double dmos = 0.0;
  double dmos_stderr = -1.0;      // negative when unknown
  std::vector<double> features;  // SVR input, or a single objective score
};

enum class Regressor {
  svr,       // linear SVR on the features
  identity,  // features[0] is the prediction
  logistic,  // features[0] mapped by a logistic fitted on the training split
};
Regressor parse_regressor(const std::string& name);
const char* to_string(Regressor r);

struct CvOptions {
  int folds = 1000;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  Regressor regressor = Regressor::svr;
  SvrParams svr;
  bool grid_search = false;
  SvrGrid grid;
  int threads = 1;
};

struct FoldResult {
  int fold = 0;
  double pcc = 0.0;
  double scc = 0.0;
  double rmse = 0.0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<double> test_predictions;  // aligned with test_ids
};

struct CvSummary {
  double pcc_median = 0.0, pcc_mean = 0.0;
  double scc_median = 0.0, scc_mean = 0.0;
  double rmse_median = 0.0, rmse_mean = 0.0;
  int folds = 0;
  int skipped = 0;  // folds with a degenerate fit or a constant test split
};

struct CvResult {
  std::vector<FoldResult> folds;
  CvSummary summary;
};

// Indices of the test split for one fold; a pure function of (seed, fold, n).
std::vector<std::size_t> fold_test_indices(std::size_t n, double train_fraction, std::uint64_t seed, int fold);

// Repeated random 80/20 sub-sampling. Each fold's split comes from
// (seed, fold) alone, so any thread count gives the same result.
// Needs at least 3 test and 5 training records per split.
CvResult cross_validate(std::span<const EvalRecord> records, const CvOptions& options = {});

// Fits the regressor on all records (used by train / score).
struct TrainedRegressor {
  Regressor kind = Regressor::svr;
  SvrModel svr;
  LogisticFit logistic;

  double predict(std::span<const double> features) const;
};
TrainedRegressor train_regressor(std::span<const EvalRecord> records, Regressor kind, const SvrParams& params,
                                 bool grid_search = false, const SvrGrid& grid = {});

struct PairLabel {
  std::size_t a = 0;
  std::size_t b = 0;
  bool significant = false;
  int sign = 0;  // sign of dmos[a] - dmos[b] when significant
};

// Two-sided z-test on DMOS differences, |z| >= z_critical marks a pair
// significant. Every unordered pair is listed once.
std::vector<PairLabel> dmos_pair_labels(std::span<const double> dmos, std::span<const double> dmos_stderr,
                                        double z_critical = 1.96);

struct KrasulaAuc {
  double different_similar = 0.0;  // NaN when either class is empty
  double better_worse = 0.0;
};

// objective must grow with dmos; negate scores of metrics that do not.
KrasulaAuc krasula_auc(std::span<const double> objective, std::span<const PairLabel> pairs);

// Area under the ROC curve of `positive` vs `negative` scores, ties count half.
double roc_auc(std::span<const double> positive, std::span<const double> negative);

enum class Orientation { higher_better, lower_better };
Orientation parse_orientation(const std::string& name);

struct GroupRank {
  std::string group;
  double mean = 0.0;
  std::size_t count = 0;
};

// Groups ordered best first by mean score; equal means keep name order.
std::vector<GroupRank> rank_groups(std::span<const std::string> groups, std::span<const double> scores,
                                   Orientation orientation);

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};
TTest two_sample_t_test(std::span<const double> a, std::span<const double> b, bool welch = true);

// Entry (i, j) is 1 when metric i's mean fold PCC is significantly above
// metric j's, -1 when below, 0 otherwise.
std::vector<std::vector<int>> significance_matrix(std::span<const std::vector<double>> fold_pcc, double alpha = 0.05,
                                                  bool welch = true);

}  // namespace emvqm
