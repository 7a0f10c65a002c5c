#pragma once

#include <span>
#include <vector>

#include <opencv2/core/mat.hpp>

#include "emvqm/curve.hpp"
#include "emvqm/keypoints.hpp"
#include "emvqm/superpixels.hpp"

namespace emvqm {

struct SpatialConfig {
  KeypointConfig keypoints;
  MatchConfig matching;
  int patch_size = 64;
  int slic_k = 32;
  double slic_compactness = 10.0;
  double match_gate = 0.25;
  // Integer search radius aligning the syn patch to the ref patch by SSD.
  int registration_radius = 2;
  ElasticParams elastic;
  int frame_stride = 1;

  void validate() const;
};

struct PatchPair {
  cv::Mat ref_patch;
  cv::Mat syn_patch;
  Point2 center_ref;
  Point2 center_syn;
};

// Cuts equal-size windows around the two centers. Both windows stay inside
// their frames; when possible they are clamped jointly so the ref-to-syn
// offset is preserved. The syn window is then moved by up to
// registration_radius px to minimise the SSD against the ref window.
PatchPair cut_patch_pair(const cv::Mat& ref, const cv::Mat& syn, Point2 center_ref, Point2 center_syn, int size,
                         int registration_radius);

// Sum of elastic distances over matched superpixel contours of one patch pair.
double patch_dissimilarity(const PatchPair& pair, const SpatialConfig& cfg);

double em_spa_frame(const cv::Mat& ref, const cv::Mat& syn, const SpatialConfig& cfg = {});

// Mean of em_spa_frame over frames 0, stride, 2*stride, ...
double em_spa_sequence(std::span<const cv::Mat> ref, std::span<const cv::Mat> syn, const SpatialConfig& cfg = {});

}  // namespace emvqm
