#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "emvqm/error.hpp"

using namespace emvqm::cli;

namespace {

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--threads", o.threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-reference quality assessment of free-viewpoint video", "emvqm"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  FixturesOptions fx;
  auto* fixtures = app.add_subcommand("fixtures", "Write a synthetic ref/syn pair or a rated dataset");
  fixtures->add_option("--kind", fx.kind, "identical, global_shift, local_warp, translating_square, "
                                          "static_scene, contour_deform or dataset")
      ->required();
  fixtures->add_option("--out", fx.out, "output directory")->required();
  fixtures->add_option("--seed", fx.seed, "content seed");
  fixtures->add_option("--width", fx.width)->check(CLI::PositiveNumber);
  fixtures->add_option("--height", fx.height)->check(CLI::PositiveNumber);
  fixtures->add_option("--frames", fx.frames)->check(CLI::PositiveNumber);
  fixtures->add_option("--amplitude", fx.amplitude, "warp amplitude in px (dataset: the largest level)");
  fixtures->add_option("--count", fx.count, "dataset: number of pairs")->check(CLI::PositiveNumber);
  fixtures->add_option("--noise", fx.noise, "dataset: DMOS noise standard deviation")->check(CLI::NonNegativeNumber);

  ExtractOptions ex;
  auto* extract = app.add_subcommand("extract", "Extract the 120 features of every manifest pair into a cache");
  extract->add_option("--manifest", ex.manifest)->required()->check(CLI::ExistingFile);
  extract->add_option("--out", ex.out, "feature cache, updated in place when it exists")->required();
  extract->add_option("--flow-dir", ex.flow_dir, "<dir>/<video_id>/{ref,syn}/<frame>.flo")->check(CLI::ExistingDirectory);
  add_common(extract, ex.common);

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Fit the SVR on every cached manifest pair");
  train->add_option("--manifest", tr.manifest)->required()->check(CLI::ExistingFile);
  train->add_option("--cache", tr.cache)->required()->check(CLI::ExistingFile);
  train->add_option("--model", tr.model, "output model (JSON)")->required();
  train->add_option("--seed", tr.seed, "recorded in the model");
  train->add_flag("--grid-search", tr.grid_search, "choose C and epsilon by 5-fold CV");
  add_common(train, tr.common);

  ScoreOptions sc;
  auto* score = app.add_subcommand("score", "Predict DMOS for one ref/syn pair");
  score->add_option("--model", sc.model)->required()->check(CLI::ExistingFile);
  score->add_option("--ref", sc.ref)->required()->check(CLI::ExistingPath);
  score->add_option("--syn", sc.syn)->required()->check(CLI::ExistingPath);

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Repeated 80/20 cross-validation");
  eval->add_option("--manifest", ev.manifest)->required()->check(CLI::ExistingFile);
  auto* cache_opt = eval->add_option("--cache", ev.cache, "feature cache")->check(CLI::ExistingFile);
  eval->add_option("--scores", ev.scores, "objective scores (video_id, score) instead of features")
      ->check(CLI::ExistingFile)
      ->excludes(cache_opt);
  eval->add_option("--folds", ev.folds)->check(CLI::PositiveNumber);
  eval->add_option("--seed", ev.seed);
  eval->add_option("--out", ev.out, "output directory")->required();
  eval->add_option("--regressor", ev.regressor, "svr, identity or logistic")
      ->check(CLI::IsMember({"svr", "identity", "logistic"}));
  eval->add_flag("--svg", ev.svg, "also write scatter.svg");
  eval->add_flag("--grid-search", ev.grid_search, "choose C and epsilon per fold");
  add_common(eval, ev.common);

  RankOptions rk;
  auto* rank = app.add_subcommand("rank", "Rank manifest groups by mean score");
  rank->add_option("--manifest", rk.manifest)->required()->check(CLI::ExistingFile);
  rank->add_option("--scores", rk.scores, "video_id, score")->required()->check(CLI::ExistingFile);
  rank->add_option("--orientation", rk.orientation, "higher or lower is better")
      ->required()
      ->check(CLI::IsMember({"higher", "lower"}));
  rank->add_option("--out", rk.out, "ranking CSV (stdout when omitted)");

  CompareOptions cp;
  auto* compare = app.add_subcommand("compare", "Significance matrix over the fold PCCs of several metrics");
  compare->add_option("--folds", cp.fold_files, "folds.csv written by eval, one per metric")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--out", cp.out, "matrix CSV (stdout when omitted)");
  compare->add_option("--alpha", cp.alpha)->check(CLI::Range(0.0, 1.0));
  compare->add_flag("--student", cp.student, "pooled-variance t-test instead of Welch");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fixtures) return run_fixtures(fx);
    if (*extract) return run_extract(ex);
    if (*train) return run_train(tr);
    if (*score) return run_score(sc);
    if (*eval) return run_eval(ev);
    if (*rank) return run_rank(rk);
    if (*compare) return run_compare(cp);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help() << '\n';
    return 2;
  } catch (const emvqm::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const emvqm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
