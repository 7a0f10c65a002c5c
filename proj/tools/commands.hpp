#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace emvqm::cli {

// Bad combination of arguments; reported like a parse error.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config;  // key = value file, empty for defaults
  int threads = 0;     // overrides the config when positive
};

struct FixturesOptions {
  std::string kind;
  std::string out;
  std::uint64_t seed = 0;
  int width = 0, height = 0, frames = 0;  // 0 keeps the fixture default
  std::optional<double> amplitude;
  int count = 30;
  double noise = 0.1;
};

struct ExtractOptions {
  CommonOptions common;
  std::string manifest, out, flow_dir;
};

struct TrainOptions {
  CommonOptions common;
  std::string manifest, cache, model;
  std::uint64_t seed = 0;
  bool grid_search = false;
};

struct ScoreOptions {
  std::string model, ref, syn;
};

struct EvalOptions {
  CommonOptions common;
  std::string manifest, cache, scores, out, regressor = "svr";
  int folds = 1000;
  std::uint64_t seed = 0;
  bool svg = false;
  bool grid_search = false;
};

struct RankOptions {
  std::string manifest, scores, orientation, out;
};

struct CompareOptions {
  std::vector<std::string> fold_files;
  std::string out;
  double alpha = 0.05;
  bool student = false;
};

int run_fixtures(const FixturesOptions& o);
int run_extract(const ExtractOptions& o);
int run_train(const TrainOptions& o);
int run_score(const ScoreOptions& o);
int run_eval(const EvalOptions& o);
int run_rank(const RankOptions& o);
int run_compare(const CompareOptions& o);

}  // namespace emvqm::cli
