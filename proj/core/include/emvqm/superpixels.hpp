#pragma once

#include <vector>

#include <opencv2/core/mat.hpp>

#include "emvqm/curve.hpp"

namespace emvqm {

struct SuperpixelLabeling {
  cv::Mat labels;  // CV_32S, values 0..count-1
  int k = 0;
  double compactness = 0.0;
  int count = 0;
};

struct LabelContour {
  int label = 0;
  Curve contour;
};

struct CurvePair {
  int ref_label = 0;
  int syn_label = 0;
  Curve ref;
  Curve syn;
  double cost = 0.0;
};

struct CurvePairSet {
  std::vector<CurvePair> pairs;
};

struct RegionStats {
  int label = 0;
  int area = 0;
  Point2 centroid;
};

// SLIC on an 8-bit grayscale patch. Labels are 4-connected and numbered in
// raster order of first appearance.
SuperpixelLabeling slic_segment(const cv::Mat& patch, int k, double compactness, int iterations = 10);

// Outer boundary of every label by Moore-neighbour tracing. Each contour
// starts at the topmost-leftmost pixel of its region and runs counter-clockwise
// on screen. Regions whose trace has fewer than 3 points are skipped.
std::vector<LabelContour> extract_contours(const SuperpixelLabeling& labeling);

std::vector<RegionStats> region_stats(const SuperpixelLabeling& labeling);

constexpr std::size_t kMinContourPoints = 8;

// Greedy one-to-one contour matching by centroid distance plus a relative
// area penalty. Pairs further apart than gate * diagonal are never matched.
CurvePairSet match_superpixels(const SuperpixelLabeling& ref, const SuperpixelLabeling& syn, double gate = 0.25);

}  // namespace emvqm
