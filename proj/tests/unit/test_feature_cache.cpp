#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "emvqm/error.hpp"
#include "emvqm/feature_cache.hpp"
#include "temp_dir.hpp"

using namespace emvqm;

namespace {

FeatureVector ramp_features(double offset) {
  FeatureVector f;
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = offset + 0.25 * static_cast<double>(i);
  for (int s = 0; s < kScaleCount; ++s) f.valid[s] = s % 2 == 0;
  return f;
}

std::vector<unsigned char> file_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& b) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST(FeatureCache, DigestMismatchMisses) {
  FeatureCache c;
  ConfigDigest a{}, b{};
  b[31] = 1;
  c.put("v1", a, ramp_features(0.0));
  ASSERT_NE(c.find("v1", a), nullptr);
  EXPECT_EQ(c.find("v1", b), nullptr);
  EXPECT_EQ(c.find("v2", a), nullptr);
  c.put("v1", b, ramp_features(1.0));
  EXPECT_EQ(c.find("v1", a), nullptr);
  EXPECT_EQ(c.find("v1", b)->values[0], 1.0);
  EXPECT_EQ(c.size(), 1u);
}

TEST(FeatureCache, ByteLayout) {
  TempDir dir;
  FeatureCache c;
  ConfigDigest d{};
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<std::uint8_t>(i * 7);
  FeatureVector f = ramp_features(0.0);
  f.values[1] = -2.0;
  c.put("ab", d, f);
  c.save(dir / "c.bin");
  const auto b = file_bytes(dir / "c.bin");
  ASSERT_EQ(b.size(), 8u + 4 + 2 + 32 + 7 + 120 * 8);
  EXPECT_EQ(std::memcmp(b.data(), "EMVQMFC1", 8), 0);
  EXPECT_EQ(b[8], 2);
  EXPECT_EQ(b[9] | b[10] | b[11], 0);
  EXPECT_EQ(b[12], 'a');
  EXPECT_EQ(b[13], 'b');
  for (std::size_t i = 0; i < 32; ++i) EXPECT_EQ(b[14 + i], d[i]);
  for (int s = 0; s < 7; ++s) EXPECT_EQ(b[46 + s], s % 2 == 0 ? 1 : 0);
  // values[1] = -2.0 is 0xC000000000000000, little endian.
  const std::size_t v1 = 53 + 8;
  for (int k = 0; k < 7; ++k) EXPECT_EQ(b[v1 + k], 0);
  EXPECT_EQ(b[v1 + 7], 0xC0);
  // values[2] = 0.5 is 0x3FE0000000000000.
  EXPECT_EQ(b[v1 + 8 + 7], 0x3F);
  EXPECT_EQ(b[v1 + 8 + 6], 0xE0);
}

TEST(FeatureCache, RoundTripIsExact) {
  TempDir dir;
  FeatureCache c;
  ConfigDigest d{};
  d[0] = 9;
  FeatureVector f = ramp_features(1.0 / 3.0);
  f.values[5] = std::numeric_limits<double>::denorm_min();
  f.values[6] = -0.0;
  c.put("zeta", d, f);
  c.put("alpha", d, ramp_features(2.0));
  c.save(dir / "c.bin");
  const FeatureCache back = FeatureCache::load(dir / "c.bin");
  ASSERT_EQ(back.size(), 2u);
  const FeatureVector* g = back.find("zeta", d);
  ASSERT_NE(g, nullptr);
  EXPECT_EQ(std::memcmp(g->values.data(), f.values.data(), sizeof(double) * f.values.size()), 0);
  EXPECT_EQ(g->valid, f.valid);
  back.save(dir / "d.bin");
  EXPECT_EQ(file_bytes(dir / "c.bin"), file_bytes(dir / "d.bin"));
}

TEST(FeatureCache, MalformedFiles) {
  TempDir dir;
  EXPECT_THROW(FeatureCache::load(dir / "missing.bin"), DataError);
  write_bytes(dir / "bad.bin", {'E', 'M', 'V', 'Q', 'M', 'F', 'C', '2'});
  EXPECT_THROW(FeatureCache::load(dir / "bad.bin"), DataError);
  write_bytes(dir / "empty.bin", {'E', 'M', 'V', 'Q', 'M', 'F', 'C', '1'});
  EXPECT_EQ(FeatureCache::load(dir / "empty.bin").size(), 0u);

  FeatureCache c;
  c.put("v", ConfigDigest{}, ramp_features(0.0));
  c.save(dir / "ok.bin");
  auto b = file_bytes(dir / "ok.bin");
  auto truncated = b;
  truncated.pop_back();
  write_bytes(dir / "t.bin", truncated);
  try {
    FeatureCache::load(dir / "t.bin");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "truncated feature cache");
  }
  auto flag = b;
  flag[8 + 4 + 1 + 32] = 2;
  write_bytes(dir / "f.bin", flag);
  EXPECT_THROW(FeatureCache::load(dir / "f.bin"), DataError);
  auto twice = b;
  twice.insert(twice.end(), b.begin() + 8, b.end());
  write_bytes(dir / "dup.bin", twice);
  EXPECT_THROW(FeatureCache::load(dir / "dup.bin"), DataError);
}
