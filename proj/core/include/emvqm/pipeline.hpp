#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "emvqm/config.hpp"
#include "emvqm/feature_cache.hpp"
#include "emvqm/manifest.hpp"
#include "emvqm/optical_flow.hpp"
#include "emvqm/temporal.hpp"
#include "emvqm/video_io.hpp"

namespace emvqm {

// EM_spa plus the temporal features of every scale for one ref/syn pair.
// With flow sources given, they replace the computed flow of each video.
FeatureVector extract_features(const VideoSource& ref, const VideoSource& syn, const PipelineConfig& cfg,
                               const FlowSource* ref_flow = nullptr, const FlowSource* syn_flow = nullptr);

struct ExtractStats {
  std::size_t computed = 0;  // pairs extracted in this call
  std::size_t cached = 0;    // pairs served by the cache
};

struct ExtractOptions {
  // Per video <flow_dir>/<video_id>/ref and .../syn holding flow files.
  std::optional<std::filesystem::path> flow_dir;
};

// Extracts every manifest entry whose (video_id, digest) is not already in
// the cache, using cfg.threads workers, then stores the new vectors in the
// cache from the calling thread. Returns vectors in manifest order.
std::vector<FeatureVector> extract_manifest(const Manifest& manifest, const PipelineConfig& cfg, FeatureCache& cache,
                                            const ExtractOptions& options = {}, ExtractStats* stats = nullptr);

}  // namespace emvqm
