#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "emvqm/config.hpp"
#include "emvqm/temporal.hpp"

namespace emvqm {

struct CacheEntry {
  std::string video_id;
  ConfigDigest digest{};
  FeatureVector features;
};

// Binary layout, little endian: "EMVQMFC1", then per entry u32 id length,
// id bytes, 32 digest bytes, 7 validity bytes (0 or 1), 120 float64 values.
// Entries are stored in video_id order.
class FeatureCache {
 public:
  // nullptr when the id is absent or was extracted under another digest.
  const FeatureVector* find(const std::string& video_id, const ConfigDigest& digest) const;
  const CacheEntry* entry(const std::string& video_id) const;
  void put(const std::string& video_id, const ConfigDigest& digest, const FeatureVector& features);

  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, CacheEntry>& entries() const { return entries_; }

  void save(const std::filesystem::path& path) const;
  static FeatureCache load(const std::filesystem::path& path);

 private:
  std::map<std::string, CacheEntry> entries_;
};

}  // namespace emvqm
