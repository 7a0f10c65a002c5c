#include "emvqm/pipeline.hpp"

#include <exception>
#include <mutex>
#include <thread>

#include "emvqm/error.hpp"
#include "emvqm/spatial.hpp"

namespace emvqm {

FeatureVector extract_features(const VideoSource& ref, const VideoSource& syn, const PipelineConfig& cfg,
                               const FlowSource* ref_flow, const FlowSource* syn_flow) {
  cfg.validate();
  if (ref.width != syn.width || ref.height != syn.height) throw DataError("frame size mismatch");
  if (ref.frame_count() != syn.frame_count()) throw DataError("frame count mismatch");
  if ((ref_flow == nullptr) != (syn_flow == nullptr)) throw ConfigError("flow must be given for both videos");
  const double em_spa = em_spa_sequence(ref.frames, syn.frames, cfg.spatial);
  const auto scales = ref_flow ? temporal_features(ref.frames, syn.frames, *ref_flow, *syn_flow, cfg.temporal)
                               : temporal_features(ref.frames, syn.frames, cfg.temporal);
  return assemble_features(scales, em_spa);
}

std::vector<FeatureVector> extract_manifest(const Manifest& manifest, const PipelineConfig& cfg, FeatureCache& cache,
                                            const ExtractOptions& options, ExtractStats* stats) {
  cfg.validate();
  const ConfigDigest digest = config_digest(cfg);
  const std::size_t n = manifest.entries.size();
  std::vector<FeatureVector> out(n);
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < n; ++i) {
    if (const FeatureVector* hit = cache.find(manifest.entries[i].video_id, digest))
      out[i] = *hit;
    else
      todo.push_back(i);
  }

  auto run = [&](std::size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    const VideoSource ref = ingest(e.ref_path), syn = ingest(e.syn_path);
    if (!options.flow_dir) {
      out[i] = extract_features(ref, syn, cfg);
      return;
    }
    const auto dir = *options.flow_dir / e.video_id;
    for (const char* side : {"ref", "syn"})
      if (!std::filesystem::is_directory(dir / side)) throw DataError("missing flow directory " + (dir / side).string());
    const InjectedFlow rf(flow_directory(dir / "ref")), sf(flow_directory(dir / "syn"));
    out[i] = extract_features(ref, syn, cfg, &rf, &sf);
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), todo.size());
  if (workers <= 1) {
    for (auto i : todo) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < todo.size(); k = next++) {
          try {
            run(todo[k]);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  for (auto i : todo) cache.put(manifest.entries[i].video_id, digest, out[i]);
  if (stats) {
    stats->computed = todo.size();
    stats->cached = n - todo.size();
  }
  return out;
}

}  // namespace emvqm
