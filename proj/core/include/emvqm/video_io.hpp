#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core/mat.hpp>

namespace emvqm {

enum class VideoFormat { y4m, png_sequence, memory };

constexpr std::size_t kMinFrames = 16;

// Luma-only video. All frames are CV_8UC1 of identical size.
struct VideoSource {
  std::string path;
  VideoFormat format = VideoFormat::memory;
  int width = 0;
  int height = 0;
  std::vector<cv::Mat> frames;

  std::size_t frame_count() const { return frames.size(); }
};

// Builds an in-memory source, checking sizes and the frame floor.
VideoSource make_video(std::vector<cv::Mat> frames, std::string path = {}, VideoFormat format = VideoFormat::memory);

VideoFormat detect_format(const std::filesystem::path& path);
VideoFormat parse_format(const std::string& name);

VideoSource ingest(const std::filesystem::path& path, VideoFormat format);
VideoSource ingest(const std::filesystem::path& path);

VideoSource read_y4m(const std::filesystem::path& path);
VideoSource read_png_sequence(const std::filesystem::path& dir);

// 4:2:0 output with neutral chroma.
void write_y4m(const std::filesystem::path& path, const VideoSource& video, int fps = 25);
// Grayscale PNGs named 00000.png, 00001.png, ...
void write_png_sequence(const std::filesystem::path& dir, const VideoSource& video);

// BT.601 luma, rounded to nearest.
unsigned char bt601_luma(unsigned char r, unsigned char g, unsigned char b);

}  // namespace emvqm
