#include <gtest/gtest.h>

#include "emvqm/error.hpp"
#include "emvqm/fixtures.hpp"
#include "emvqm/pipeline.hpp"
#include "motion.hpp"
#include "temp_dir.hpp"

using namespace emvqm;
namespace fs = std::filesystem;

namespace {

FixtureParams small_params() {
  FixtureParams p;
  p.width = p.height = 64;
  p.frames = 16;
  return p;
}

// Writes one y4m pair per kind and a manifest over them.
Manifest small_manifest(const fs::path& dir, const std::vector<FixtureKind>& kinds) {
  Manifest m;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const auto pair = make_fixture(kinds[i], small_params(), i);
    const std::string id = "v" + std::to_string(i);
    write_y4m(dir / (id + "_ref.y4m"), pair.ref);
    write_y4m(dir / (id + "_syn.y4m"), pair.syn);
    m.entries.push_back({id, id + "_ref.y4m", id + "_syn.y4m", to_string(kinds[i]), static_cast<double>(i), -1.0});
  }
  write_manifest(dir / "m.csv", m);
  return load_manifest(dir / "m.csv");
}

}  // namespace

TEST(ExtractFeatures, IdenticalPairIsAllZero) {
  const auto pair = make_fixture(FixtureKind::identical, small_params(), 3);
  const FeatureVector f = extract_features(pair.ref, pair.syn, PipelineConfig{});
  for (double v : f.values) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(f.valid[0]);
}

TEST(ExtractFeatures, MismatchedInputs) {
  const auto a = make_fixture(FixtureKind::identical, small_params(), 0);
  FixtureParams big = small_params();
  big.width = 80;
  const auto b = make_fixture(FixtureKind::identical, big, 0);
  EXPECT_THROW(extract_features(a.ref, b.syn, PipelineConfig{}), DataError);
  FixtureParams longer = small_params();
  longer.frames = 17;
  const auto c = make_fixture(FixtureKind::identical, longer, 0);
  EXPECT_THROW(extract_features(a.ref, c.syn, PipelineConfig{}), DataError);
  const ComputedFlow flow;
  EXPECT_THROW(extract_features(a.ref, a.syn, PipelineConfig{}, &flow, nullptr), ConfigError);
}

TEST(ExtractManifest, CacheHitSkipsWorkAndDigestChangeForcesIt) {
  TempDir dir;
  const Manifest m = small_manifest(dir.path, {FixtureKind::identical, FixtureKind::local_warp});
  PipelineConfig cfg;
  FeatureCache cache;
  ExtractStats st;
  const auto first = extract_manifest(m, cfg, cache, {}, &st);
  EXPECT_EQ(st.computed, 2u);
  EXPECT_EQ(st.cached, 0u);
  EXPECT_EQ(cache.size(), 2u);
  for (double v : first[0].values) EXPECT_EQ(v, 0.0);
  EXPECT_GT(first[1].values[0], 0.0);

  cache.save(dir / "c.bin");
  FeatureCache reloaded = FeatureCache::load(dir / "c.bin");
  const auto second = extract_manifest(m, cfg, reloaded, {}, &st);
  EXPECT_EQ(st.computed, 0u);
  EXPECT_EQ(st.cached, 2u);
  EXPECT_EQ(second[1].values, first[1].values);

  cfg.temporal.minkowski_p = 4.0;
  const auto third = extract_manifest(m, cfg, reloaded, {}, &st);
  EXPECT_EQ(st.computed, 2u);
  EXPECT_EQ(reloaded.entry("v1")->digest, config_digest(cfg));
  EXPECT_EQ(third[1].values[0], first[1].values[0]);
  // Only the Minkowski entries move with p.
  EXPECT_NE(third[1].values[4], first[1].values[4]);
}

TEST(ExtractManifest, ThreadCountDoesNotChangeResults) {
  TempDir dir;
  const Manifest m =
      small_manifest(dir.path, {FixtureKind::local_warp, FixtureKind::global_shift, FixtureKind::local_warp});
  PipelineConfig one, three;
  three.threads = 3;
  FeatureCache c1, c3;
  const auto a = extract_manifest(m, one, c1);
  const auto b = extract_manifest(m, three, c3);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values) << i;
  EXPECT_EQ(config_digest(one), config_digest(three));
}

TEST(ExtractManifest, InjectedFlowDirectory) {
  TempDir dir;
  FixtureParams p = small_params();
  p.velocity = {2.0, 0.0};
  const auto pair = make_fixture(FixtureKind::translating_square, p, 0);
  write_y4m(dir / "r.y4m", pair.ref);
  write_y4m(dir / "s.y4m", pair.syn);
  Manifest m;
  m.entries.push_back({"sq", dir / "r.y4m", dir / "s.y4m", "g", 1.0, -1.0});
  FeatureCache cache;
  EXPECT_THROW(extract_manifest(m, {}, cache, {dir / "flow"}), DataError);

  for (const char* side : {"ref", "syn"}) {
    fs::create_directories(dir.path / "flow" / "sq" / side);
    for (int t = 0; t + 1 < p.frames; ++t)
      write_flow_file(flow_file_name(dir.path / "flow" / "sq" / side, t), test::square_flow(p, t));
  }
  const auto f = extract_manifest(m, {}, cache, {dir / "flow"});
  // Identical content and identical exact flow: every temporal entry is zero.
  for (std::size_t i = 0; i + 1 < kFeatureCount; ++i) EXPECT_EQ(f[0].values[i], 0.0) << i;
  EXPECT_TRUE(f[0].valid[0]);
}
