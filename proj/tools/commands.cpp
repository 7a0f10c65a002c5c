#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

#include <json.hpp>

#include "emvqm/config.hpp"
#include "emvqm/error.hpp"
#include "emvqm/evaluation.hpp"
#include "emvqm/feature_cache.hpp"
#include "emvqm/fixtures.hpp"
#include "emvqm/manifest.hpp"
#include "emvqm/pipeline.hpp"
#include "scatter_svg.hpp"

namespace emvqm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kModelFormat = "emvqm-model";
constexpr int kModelVersion = 1;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

PipelineConfig pipeline_config(const CommonOptions& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (o.threads > 0) cfg.threads = o.threads;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<EvalRecord> records_from_cache(const Manifest& m, const FeatureCache& cache, const ConfigDigest& digest) {
  std::vector<EvalRecord> out;
  for (const auto& e : m.entries) {
    const FeatureVector* f = cache.find(e.video_id, digest);
    if (!f) throw DataError("no cached features for " + e.video_id + " under the current config");
    out.push_back({e.video_id, e.group, e.dmos, e.dmos_stderr, {f->values.begin(), f->values.end()}});
  }
  return out;
}

std::vector<EvalRecord> records_from_scores(const Manifest& m, const std::map<std::string, double>& scores) {
  std::vector<EvalRecord> out;
  for (const auto& e : m.entries) {
    const auto it = scores.find(e.video_id);
    if (it == scores.end()) throw DataError("no score for " + e.video_id);
    out.push_back({e.video_id, e.group, e.dmos, e.dmos_stderr, {it->second}});
  }
  return out;
}

json model_json(const SvrModel& m) {
  return {{"c", m.c},
          {"epsilon", m.epsilon},
          {"bias", m.bias},
          {"weights", m.weights},
          {"scale_min", m.scale_min},
          {"scale_max", m.scale_max}};
}

SvrModel model_from_json(const json& j) {
  SvrModel m;
  m.c = j.at("c").get<double>();
  m.epsilon = j.at("epsilon").get<double>();
  m.bias = j.at("bias").get<double>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.scale_min = j.at("scale_min").get<std::vector<double>>();
  m.scale_max = j.at("scale_max").get<std::vector<double>>();
  if (m.weights.size() != kFeatureCount || m.scale_min.size() != kFeatureCount || m.scale_max.size() != kFeatureCount)
    throw DataError("model has the wrong feature count");
  return m;
}

}  // namespace

int run_fixtures(const FixturesOptions& o) {
  FixtureParams fp;
  if (o.kind == "dataset") {
    DatasetParams dp;
    fp = dp.fixture;
  }
  if (o.width > 0) fp.width = o.width;
  if (o.height > 0) fp.height = o.height;
  if (o.frames > 0) fp.frames = o.frames;
  if (o.amplitude) fp.amplitude = *o.amplitude;
  fs::create_directories(o.out);
  if (o.kind == "dataset") {
    DatasetParams dp;
    dp.fixture = fp;
    dp.count = o.count;
    dp.noise = o.noise;
    if (o.amplitude) dp.max_amplitude = *o.amplitude;
    const Manifest m = write_fixture_dataset(o.out, dp, o.seed);
    std::cout << "wrote " << m.entries.size() << " pairs and " << (fs::path(o.out) / "manifest.csv").string() << '\n';
    return 0;
  }
  const FixturePair pair = make_fixture(parse_fixture_kind(o.kind), fp, o.seed);
  write_y4m(fs::path(o.out) / "ref.y4m", pair.ref);
  write_y4m(fs::path(o.out) / "syn.y4m", pair.syn);
  std::cout << "wrote " << o.kind << " pair (" << fp.width << "x" << fp.height << "x" << fp.frames << ") to " << o.out
            << '\n';
  return 0;
}

int run_extract(const ExtractOptions& o) {
  const PipelineConfig cfg = pipeline_config(o.common);
  const Manifest m = load_manifest(o.manifest);
  FeatureCache cache = fs::exists(o.out) ? FeatureCache::load(o.out) : FeatureCache{};
  emvqm::ExtractOptions eo;
  if (!o.flow_dir.empty()) eo.flow_dir = o.flow_dir;
  ExtractStats st;
  extract_manifest(m, cfg, cache, eo, &st);
  cache.save(o.out);
  std::cout << "extracted " << st.computed << ", cached " << st.cached << ", digest " << to_hex(config_digest(cfg))
            << '\n';
  return 0;
}

int run_train(const TrainOptions& o) {
  const PipelineConfig cfg = pipeline_config(o.common);
  const Manifest m = load_manifest(o.manifest);
  const FeatureCache cache = FeatureCache::load(o.cache);
  const auto records = records_from_cache(m, cache, config_digest(cfg));
  const bool grid = o.grid_search || cfg.eval.grid_search;
  const TrainedRegressor model = train_regressor(records, Regressor::svr, cfg.svr, grid);
  const json j = {{"format", kModelFormat},
                  {"version", kModelVersion},
                  {"regressor", "svr"},
                  {"seed", o.seed},
                  {"records", records.size()},
                  {"grid_search", grid},
                  {"config", format_config(cfg)},
                  {"config_digest", to_hex(config_digest(cfg))},
                  {"svr", model_json(model.svr)}};
  write_text(o.model, j.dump(2) + "\n");
  std::cout << "trained on " << records.size() << " records, C " << fmt(model.svr.c) << ", epsilon "
            << fmt(model.svr.epsilon) << '\n';
  return 0;
}

int run_score(const ScoreOptions& o) {
  json j;
  try {
    j = json::parse(read_text(o.model));
    if (j.at("format") != kModelFormat || j.at("version") != kModelVersion) throw DataError("unsupported model file");
  } catch (const json::exception&) {
    throw DataError("malformed model file " + o.model);
  }
  SvrModel model;
  PipelineConfig cfg;
  try {
    model = model_from_json(j.at("svr"));
    cfg = parse_config(j.at("config").get<std::string>());
  } catch (const json::exception&) {
    throw DataError("malformed model file " + o.model);
  } catch (const ConfigError& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  const VideoSource ref = ingest(o.ref), syn = ingest(o.syn);
  const FeatureVector f = extract_features(ref, syn, cfg);
  std::cout << fmt(svr_predict(model, f.values)) << '\n';
  return 0;
}

int run_eval(const EvalOptions& o) {
  if (o.cache.empty() == o.scores.empty()) throw UsageError("eval needs exactly one of --cache or --scores");
  const PipelineConfig cfg = pipeline_config(o.common);
  const Manifest m = load_manifest(o.manifest);
  const auto records = o.cache.empty() ? records_from_scores(m, load_scores(o.scores))
                                       : records_from_cache(m, FeatureCache::load(o.cache), config_digest(cfg));
  CvOptions cv;
  cv.folds = o.folds;
  cv.seed = o.seed;
  cv.regressor = parse_regressor(o.regressor);
  cv.svr = cfg.svr;
  cv.grid_search = o.grid_search || cfg.eval.grid_search;
  cv.train_fraction = cfg.eval.train_fraction;
  cv.threads = cfg.threads;
  const CvResult res = cross_validate(records, cv);

  const fs::path out(o.out);
  fs::create_directories(out);
  std::string folds = "fold,pcc,scc,rmse\n";
  for (const auto& f : res.folds) folds += std::to_string(f.fold) + "," + fmt(f.pcc) + "," + fmt(f.scc) + "," + fmt(f.rmse) + "\n";
  write_text(out / "folds.csv", folds);

  // Out-of-fold prediction per record: mean over the folds that tested it.
  std::map<std::string, std::pair<double, int>> oof;
  for (const auto& f : res.folds)
    for (std::size_t k = 0; k < f.test_ids.size(); ++k) {
      auto& [sum, n] = oof[f.test_ids[k]];
      sum += f.test_predictions[k];
      ++n;
    }
  std::vector<double> pred, dmos, se;
  std::string scatter = "video_id,dmos,predicted\n";
  bool have_se = true;
  for (const auto& r : records) {
    const auto it = oof.find(r.video_id);
    if (it == oof.end()) continue;
    const double p = it->second.first / it->second.second;
    scatter += r.video_id + "," + fmt(r.dmos) + "," + fmt(p) + "\n";
    pred.push_back(p);
    dmos.push_back(r.dmos);
    se.push_back(r.dmos_stderr);
    have_se = have_se && r.dmos_stderr >= 0.0;
  }
  write_text(out / "scatter.csv", scatter);

  const CvSummary& s = res.summary;
  json summary = {{"records", records.size()},
                  {"folds", s.folds},
                  {"skipped_folds", s.skipped},
                  {"seed", o.seed},
                  {"regressor", to_string(cv.regressor)},
                  {"grid_search", cv.grid_search},
                  {"train_fraction", cv.train_fraction},
                  {"pcc", {{"median", s.pcc_median}, {"mean", s.pcc_mean}}},
                  {"scc", {{"median", s.scc_median}, {"mean", s.scc_mean}}},
                  {"rmse", {{"median", s.rmse_median}, {"mean", s.rmse_mean}}},
                  {"krasula", nullptr}};
  if (have_se && pred.size() >= 2) {
    try {
      const auto auc = krasula_auc(pred, dmos_pair_labels(dmos, se));
      summary["krasula"] = {{"different_similar", auc.different_similar}, {"better_worse", auc.better_worse}};
    } catch (const EvaluationError&) {
    }
  }
  write_text(out / "summary.json", summary.dump(2) + "\n");

  if (o.svg) {
    std::optional<LogisticFit> curve;
    try {
      curve = fit_logistic(pred, dmos);
    } catch (const Error&) {
    }
    write_text(out / "scatter.svg", scatter_svg(pred, dmos, curve));
  }
  std::cout << "median PCC " << fmt(s.pcc_median) << ", SROCC " << fmt(s.scc_median) << ", RMSE " << fmt(s.rmse_median)
            << " over " << s.folds - s.skipped << " folds\n";
  return 0;
}

int run_rank(const RankOptions& o) {
  const Manifest m = load_manifest(o.manifest);
  const auto scores = load_scores(o.scores);
  std::vector<std::string> groups;
  std::vector<double> values;
  for (const auto& e : m.entries) {
    const auto it = scores.find(e.video_id);
    if (it == scores.end()) throw DataError("no score for " + e.video_id);
    groups.push_back(e.group);
    values.push_back(it->second);
  }
  const auto ranks = rank_groups(groups, values, parse_orientation(o.orientation));
  std::string text = "rank,group,mean,count\n";
  for (std::size_t i = 0; i < ranks.size(); ++i)
    text += std::to_string(i + 1) + "," + ranks[i].group + "," + fmt(ranks[i].mean) + "," + std::to_string(ranks[i].count) + "\n";
  if (o.out.empty())
    std::cout << text;
  else
    write_text(o.out, text);
  return 0;
}

int run_compare(const CompareOptions& o) {
  if (o.fold_files.size() < 2) throw UsageError("compare needs at least two --folds files");
  std::vector<std::map<int, double>> per_metric;
  for (const auto& path : o.fold_files) {
    const CsvTable t = read_csv(path);
    const int fold = t.column("fold"), pcc = t.column("pcc");
    if (fold < 0 || pcc < 0) throw DataError(path + " lacks fold or pcc columns");
    std::map<int, double> values;
    for (const auto& row : t.rows) {
      int f = 0;
      double v = 0.0;
      const auto fr = std::from_chars(row[fold].data(), row[fold].data() + row[fold].size(), f);
      const bool nan = row[pcc] == "nan";
      const auto pr = std::from_chars(row[pcc].data(), row[pcc].data() + row[pcc].size(), v);
      if (fr.ec != std::errc() || (!nan && pr.ec != std::errc())) throw DataError("bad row in " + path);
      values[f] = nan ? std::nan("") : v;
    }
    per_metric.push_back(std::move(values));
  }
  // Folds defined for every metric, in fold order.
  std::vector<std::vector<double>> pcc(per_metric.size());
  for (const auto& [f, v0] : per_metric.front()) {
    bool ok = true;
    for (const auto& m : per_metric) {
      const auto it = m.find(f);
      ok = ok && it != m.end() && !std::isnan(it->second);
    }
    if (!ok) continue;
    for (std::size_t k = 0; k < per_metric.size(); ++k) pcc[k].push_back(per_metric[k].at(f));
  }
  const auto sig = significance_matrix(pcc, o.alpha, !o.student);
  std::string text = "metric";
  for (const auto& p : o.fold_files) text += "," + p;
  text += "\n";
  for (std::size_t i = 0; i < sig.size(); ++i) {
    text += o.fold_files[i];
    for (int v : sig[i]) text += "," + std::to_string(v);
    text += "\n";
  }
  if (o.out.empty())
    std::cout << text;
  else
    write_text(o.out, text);
  return 0;
}

}  // namespace emvqm::cli
