#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace emvqm {

// Plain comma separated text with a header row. Fields are trimmed; quoting
// is not supported.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a named column, or -1.
  int column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

struct ManifestEntry {
  std::string video_id;
  std::filesystem::path ref_path;
  std::filesystem::path syn_path;
  std::string group;
  double dmos = 0.0;
  double dmos_stderr = -1.0;  // negative when the column is absent or empty
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  const ManifestEntry* find(const std::string& video_id) const;
};

// Columns video_id, ref_path, syn_path, group, dmos and optionally
// dmos_stderr, in any order. Relative paths resolve against the manifest's
// directory. Ids must be unique and, when check_paths is set, both paths
// must exist.
Manifest load_manifest(const std::filesystem::path& path, bool check_paths = true);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

// Two-column score file: video_id and one numeric column (its name is free).
std::map<std::string, double> load_scores(const std::filesystem::path& path);

}  // namespace emvqm
