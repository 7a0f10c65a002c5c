#include "emvqm/manifest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "emvqm/error.hpp"

namespace emvqm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  if (line.find('"') != std::string::npos) throw DataError("quoted CSV fields are not supported");
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what, std::size_t row) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw DataError("bad " + what + " on row " + std::to_string(row));
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw DataError("row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw DataError("empty CSV");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

const ManifestEntry* Manifest::find(const std::string& video_id) const {
  for (const auto& e : entries)
    if (e.video_id == video_id) return &e;
  return nullptr;
}

Manifest load_manifest(const std::filesystem::path& path, bool check_paths) {
  const CsvTable t = read_csv(path);
  const int id = t.column("video_id"), ref = t.column("ref_path"), syn = t.column("syn_path"), group = t.column("group"),
            dmos = t.column("dmos"), se = t.column("dmos_stderr");
  for (auto [col, name] : {std::pair{id, "video_id"}, std::pair{ref, "ref_path"}, std::pair{syn, "syn_path"},
                           std::pair{group, "group"}, std::pair{dmos, "dmos"}}) {
    if (col < 0) throw DataError(std::string("manifest lacks column ") + name);
  }
  const auto base = path.parent_path();
  Manifest m;
  std::set<std::string> ids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    ManifestEntry e;
    e.video_id = row[id];
    if (e.video_id.empty()) throw DataError("empty video_id on row " + std::to_string(r + 1));
    if (!ids.insert(e.video_id).second) throw DataError("duplicate video_id " + e.video_id);
    e.ref_path = base / row[ref];
    e.syn_path = base / row[syn];
    e.group = row[group];
    e.dmos = parse_double(row[dmos], "dmos", r + 1);
    if (se >= 0 && !row[se].empty()) {
      e.dmos_stderr = parse_double(row[se], "dmos_stderr", r + 1);
      if (e.dmos_stderr < 0.0) throw DataError("negative dmos_stderr on row " + std::to_string(r + 1));
    }
    if (check_paths) {
      for (const auto& p : {e.ref_path, e.syn_path})
        if (!std::filesystem::exists(p)) throw DataError("missing video " + p.string());
    }
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw DataError("manifest has no entries");
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "video_id,ref_path,syn_path,group,dmos,dmos_stderr\n";
  for (const auto& e : manifest.entries) {
    out << e.video_id << ',' << e.ref_path.generic_string() << ',' << e.syn_path.generic_string() << ',' << e.group
        << ',' << format_double(e.dmos) << ',' << (e.dmos_stderr >= 0.0 ? format_double(e.dmos_stderr) : "") << '\n';
  }
  if (!out) throw DataError("cannot write " + path.string());
}

std::map<std::string, double> load_scores(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const int id = t.column("video_id");
  if (id < 0 || t.header.size() != 2) throw DataError("score file needs video_id and one score column");
  const int score = 1 - id;
  std::map<std::string, double> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!out.emplace(t.rows[r][id], parse_double(t.rows[r][score], "score", r + 1)).second)
      throw DataError("duplicate video_id " + t.rows[r][id]);
  }
  return out;
}

}  // namespace emvqm
