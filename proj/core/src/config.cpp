#include "emvqm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>
#include <vector>

#include <openssl/evp.h>

#include "emvqm/error.hpp"

namespace emvqm {

namespace {

struct Field {
  const char* key;
  bool method;      // value fixed by the method rather than a convention
  bool extraction;  // part of the feature digest
  std::variant<int*, double*, bool*> target;
};

std::vector<Field> fields(PipelineConfig& c) {
  auto& sp = c.spatial;
  auto& tm = c.temporal;
  return {
      {"spatial.keypoints.relative_threshold", false, true, &sp.keypoints.relative_threshold},
      {"spatial.keypoints.min_response", false, true, &sp.keypoints.min_response},
      {"spatial.keypoints.octaves", false, true, &sp.keypoints.octaves},
      {"spatial.matching.ratio", false, true, &sp.matching.ratio},
      {"spatial.matching.max_disparity", false, true, &sp.matching.max_disparity},
      {"spatial.patch_size", true, true, &sp.patch_size},
      {"spatial.slic_k", false, true, &sp.slic_k},
      {"spatial.slic_compactness", false, true, &sp.slic_compactness},
      {"spatial.match_gate", false, true, &sp.match_gate},
      {"spatial.registration_radius", false, true, &sp.registration_radius},
      {"spatial.elastic.a2", false, true, &sp.elastic.a2},
      {"spatial.elastic.b2", false, true, &sp.elastic.b2},
      {"spatial.elastic.n_samples", false, true, &sp.elastic.n_samples},
      {"spatial.elastic.cyclic_align", false, true, &sp.elastic.cyclic_align},
      {"spatial.frame_stride", false, true, &sp.frame_stride},
      {"temporal.tracker.step", false, true, &tm.tracker.step},
      {"temporal.tracker.structure_threshold", false, true, &tm.tracker.structure_threshold},
      {"temporal.tracker.static_threshold", false, true, &tm.tracker.static_threshold},
      {"temporal.tracker.erratic_threshold", false, true, &tm.tracker.erratic_threshold},
      {"temporal.tracker.length", true, true, &tm.tracker.length},
      {"temporal.tracker.match_radius_steps", false, true, &tm.tracker.match_radius_steps},
      {"temporal.tracker.scales", true, true, &tm.tracker.scales},
      {"temporal.descriptors.volume", false, true, &tm.descriptors.volume},
      {"temporal.descriptors.cells_xy", false, true, &tm.descriptors.cells_xy},
      {"temporal.descriptors.cells_t", false, true, &tm.descriptors.cells_t},
      {"temporal.descriptors.bins", false, true, &tm.descriptors.bins},
      {"temporal.descriptors.zero_flow", false, true, &tm.descriptors.zero_flow},
      {"temporal.flow.levels", false, true, &tm.flow.levels},
      {"temporal.flow.warps", false, true, &tm.flow.warps},
      {"temporal.flow.window_sigma", false, true, &tm.flow.window_sigma},
      {"temporal.flow.regularization", false, true, &tm.flow.regularization},
      {"temporal.flow.max_flow", false, true, &tm.flow.max_flow},
      {"temporal.elastic.a2", false, true, &tm.elastic.a2},
      {"temporal.elastic.b2", false, true, &tm.elastic.b2},
      {"temporal.elastic.n_samples", false, true, &tm.elastic.n_samples},
      {"temporal.elastic.cyclic_align", false, true, &tm.elastic.cyclic_align},
      {"temporal.normalize_trajectory_length", false, true, &tm.normalize_trajectory_length},
      {"temporal.minkowski_p", false, true, &tm.minkowski_p},
      {"svr.c", false, false, &c.svr.c},
      {"svr.epsilon", false, false, &c.svr.epsilon},
      {"svr.tolerance", false, false, &c.svr.tolerance},
      {"svr.max_epochs", false, false, &c.svr.max_epochs},
      {"eval.train_fraction", true, false, &c.eval.train_fraction},
      {"eval.grid_search", false, false, &c.eval.grid_search},
      {"eval.welch", false, false, &c.eval.welch},
      {"eval.alpha", false, false, &c.eval.alpha},
      {"threads", false, false, &c.threads},
  };
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void assign(const Field& f, std::string_view value, int line) {
  const std::string where = " (line " + std::to_string(line) + ")";
  bool ok = false;
  if (auto* p = std::get_if<int*>(&f.target)) {
    ok = parse_number(value, **p);
  } else if (auto* p = std::get_if<double*>(&f.target)) {
    ok = parse_number(value, **p) && std::isfinite(**p);
  } else if (auto* p = std::get_if<bool*>(&f.target)) {
    ok = value == "true" || value == "false";
    if (ok) **p = value == "true";
  }
  if (!ok) throw ConfigError("bad value for " + std::string(f.key) + where);
}

std::string value_text(const Field& f) {
  if (auto* p = std::get_if<int*>(&f.target)) return std::to_string(**p);
  if (auto* p = std::get_if<bool*>(&f.target)) return **p ? "true" : "false";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, *std::get<double*>(f.target));
  return {buf, r.ptr};
}

}  // namespace

void PipelineConfig::validate() const {
  spatial.validate();
  temporal.validate();
  svr.validate();
  if (!(eval.train_fraction > 0.0 && eval.train_fraction < 1.0)) throw ConfigError("train_fraction must be in (0, 1)");
  if (!(eval.alpha > 0.0 && eval.alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
  if (threads < 1) throw ConfigError("threads must be positive");
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig cfg;
  const auto table = fields(cfg);
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto h = s.find('#'); h != std::string_view::npos) s = s.substr(0, h);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value (line " + std::to_string(line) + ")");
    const std::string key(trim(s.substr(0, eq)));
    const auto value = trim(s.substr(eq + 1));
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return key == f.key; });
    if (it == table.end()) throw ConfigError("unknown key " + key + " (line " + std::to_string(line) + ")");
    if (!seen.insert(key).second) throw ConfigError("repeated key " + key + " (line " + std::to_string(line) + ")");
    assign(*it, value, line);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const PipelineConfig& cfg) {
  PipelineConfig copy = cfg;
  const PipelineConfig defaults;
  PipelineConfig def_copy = defaults;
  const auto table = fields(copy);
  const auto def_table = fields(def_copy);
  std::string out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table[i].key;
    out += " = ";
    out += value_text(table[i]);
    out += table[i].method ? "  # method, default " : "  # convention, default ";
    out += value_text(def_table[i]);
    out += '\n';
  }
  return out;
}

ConfigDigest config_digest(const PipelineConfig& cfg) {
  PipelineConfig copy = cfg;
  std::string canon = "emvqm-features-v1\n";
  for (const auto& f : fields(copy)) {
    if (!f.extraction) continue;
    canon += f.key;
    canon += '=';
    canon += value_text(f);
    canon += '\n';
  }
  ConfigDigest d{};
  unsigned int len = 0;
  if (!EVP_Digest(canon.data(), canon.size(), d.data(), &len, EVP_sha256(), nullptr) || len != d.size())
    throw Error("digest failed");
  return d;
}

std::string to_hex(const ConfigDigest& digest) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (auto b : digest) {
    s += hex[b >> 4];
    s += hex[b & 15];
  }
  return s;
}

}  // namespace emvqm
