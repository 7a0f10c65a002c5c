#include "emvqm/feature_cache.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "emvqm/error.hpp"

namespace emvqm {

namespace {

constexpr char kMagic[8] = {'E', 'M', 'V', 'Q', 'M', 'F', 'C', '1'};
constexpr std::uint32_t kMaxIdLength = 1u << 16;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xff);
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& data) : data_(data) {}

  bool done() const { return pos_ == data_.size(); }

  const unsigned char* take(std::size_t n) {
    if (data_.size() - pos_ < n) throw DataError("truncated feature cache");
    const unsigned char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::uint32_t u32() {
    const unsigned char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }

  double f64() {
    const unsigned char* p = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return std::bit_cast<double>(v);
  }

 private:
  const std::vector<unsigned char>& data_;
  std::size_t pos_ = 0;
};

}  // namespace

const FeatureVector* FeatureCache::find(const std::string& video_id, const ConfigDigest& digest) const {
  const CacheEntry* e = entry(video_id);
  return e && e->digest == digest ? &e->features : nullptr;
}

const CacheEntry* FeatureCache::entry(const std::string& video_id) const {
  const auto it = entries_.find(video_id);
  return it == entries_.end() ? nullptr : &it->second;
}

void FeatureCache::put(const std::string& video_id, const ConfigDigest& digest, const FeatureVector& features) {
  if (video_id.empty() || video_id.size() > kMaxIdLength) throw DataError("bad video_id length");
  entries_[video_id] = {video_id, digest, features};
}

void FeatureCache::save(const std::filesystem::path& path) const {
  std::string out(kMagic, sizeof kMagic);
  for (const auto& [id, e] : entries_) {
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out += id;
    out.append(reinterpret_cast<const char*>(e.digest.data()), e.digest.size());
    for (bool v : e.features.valid) out += static_cast<char>(v ? 1 : 0);
    for (double v : e.features.values) put_f64(out, v);
  }
  // Write beside the target and rename, so readers never see a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write feature cache " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("cannot write feature cache " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

FeatureCache FeatureCache::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read feature cache " + path.string());
  const std::vector<unsigned char> data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(data);
  if (data.size() < sizeof kMagic || std::memcmp(r.take(sizeof kMagic), kMagic, sizeof kMagic) != 0)
    throw DataError("not a feature cache");
  FeatureCache cache;
  while (!r.done()) {
    const std::uint32_t len = r.u32();
    if (len == 0 || len > kMaxIdLength) throw DataError("bad video_id length in feature cache");
    const unsigned char* id = r.take(len);
    CacheEntry e;
    e.video_id.assign(reinterpret_cast<const char*>(id), len);
    std::memcpy(e.digest.data(), r.take(e.digest.size()), e.digest.size());
    const unsigned char* valid = r.take(kScaleCount);
    for (int s = 0; s < kScaleCount; ++s) {
      if (valid[s] > 1) throw DataError("bad validity flag in feature cache");
      e.features.valid[s] = valid[s] == 1;
    }
    for (double& v : e.features.values) v = r.f64();
    if (cache.entries_.count(e.video_id)) throw DataError("duplicate video_id in feature cache");
    cache.entries_.emplace(e.video_id, std::move(e));
  }
  return cache;
}

}  // namespace emvqm
