#include "emvqm/video_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "emvqm/error.hpp"

namespace fs = std::filesystem;

namespace emvqm {

namespace {

enum class Chroma { c420, c422, c444, mono };

struct Y4mHeader {
  int width = 0;
  int height = 0;
  Chroma chroma = Chroma::c420;
};

Y4mHeader parse_y4m_header(const std::string& line) {
  std::istringstream in(line);
  std::string tok;
  if (!(in >> tok) || tok != "YUV4MPEG2") throw DataError("malformed header");
  Y4mHeader h;
  while (in >> tok) {
    const char tag = tok[0];
    const std::string val = tok.substr(1);
    switch (tag) {
      case 'W':
      case 'H': {
        int v = 0;
        try {
          std::size_t used = 0;
          v = std::stoi(val, &used);
          if (used != val.size()) v = 0;
        } catch (const std::exception&) {
          v = 0;
        }
        if (v <= 0) throw DataError("malformed header");
        (tag == 'W' ? h.width : h.height) = v;
        break;
      }
      case 'C':
        if (val == "420" || val == "420jpeg" || val == "420paldv" || val == "420mpeg2") {
          h.chroma = Chroma::c420;
        } else if (val == "422") {
          h.chroma = Chroma::c422;
        } else if (val == "444") {
          h.chroma = Chroma::c444;
        } else if (val == "mono") {
          h.chroma = Chroma::mono;
        } else {
          throw DataError("unsupported colorspace " + val);
        }
        break;
      default:
        break;  // F, I, A, X carry nothing the luma path needs
    }
  }
  if (h.width == 0 || h.height == 0) throw DataError("malformed header");
  return h;
}

std::size_t chroma_bytes(const Y4mHeader& h) {
  const std::size_t cw = (h.width + 1) / 2, ch = (h.height + 1) / 2;
  switch (h.chroma) {
    case Chroma::c420:
      return 2 * cw * ch;
    case Chroma::c422:
      return 2 * cw * static_cast<std::size_t>(h.height);
    case Chroma::c444:
      return 2 * static_cast<std::size_t>(h.width) * h.height;
    case Chroma::mono:
      return 0;
  }
  return 0;
}

void check_frame_floor(std::size_t n) {
  if (n < kMinFrames) throw DataError("too few frames");
}

}  // namespace

unsigned char bt601_luma(unsigned char r, unsigned char g, unsigned char b) {
  // Integer form of round(0.299 R + 0.587 G + 0.114 B).
  const int y = (299 * r + 587 * g + 114 * b + 500) / 1000;
  return static_cast<unsigned char>(std::min(y, 255));
}

VideoSource make_video(std::vector<cv::Mat> frames, std::string path, VideoFormat format) {
  check_frame_floor(frames.size());
  VideoSource v;
  v.path = std::move(path);
  v.format = format;
  v.width = frames.front().cols;
  v.height = frames.front().rows;
  for (const auto& f : frames) {
    if (f.type() != CV_8UC1) throw DataError("frames must be 8-bit luma");
    if (f.cols != v.width || f.rows != v.height) throw DataError("inconsistent frame sizes");
  }
  v.frames = std::move(frames);
  return v;
}

VideoFormat parse_format(const std::string& name) {
  if (name == "y4m") return VideoFormat::y4m;
  if (name == "png" || name == "png_sequence") return VideoFormat::png_sequence;
  throw ConfigError("unsupported video format " + name);
}

VideoFormat detect_format(const fs::path& path) {
  if (fs::is_directory(path)) return VideoFormat::png_sequence;
  if (path.extension() == ".y4m") return VideoFormat::y4m;
  throw DataError("cannot determine video format of " + path.string());
}

VideoSource ingest(const fs::path& path, VideoFormat format) {
  switch (format) {
    case VideoFormat::y4m:
      return read_y4m(path);
    case VideoFormat::png_sequence:
      return read_png_sequence(path);
    case VideoFormat::memory:
      break;
  }
  throw ConfigError("cannot ingest an in-memory source");
}

VideoSource ingest(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("no such video " + path.string());
  return ingest(path, detect_format(path));
}

VideoSource read_y4m(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("malformed header");
  const Y4mHeader h = parse_y4m_header(line);
  const std::size_t luma = static_cast<std::size_t>(h.width) * h.height;
  const std::size_t chroma = chroma_bytes(h);

  std::vector<cv::Mat> frames;
  std::vector<char> skip(chroma);
  while (std::getline(in, line)) {
    if (line.rfind("FRAME", 0) != 0) throw DataError("malformed frame marker");
    cv::Mat y(h.height, h.width, CV_8UC1);
    in.read(reinterpret_cast<char*>(y.data), static_cast<std::streamsize>(luma));
    if (static_cast<std::size_t>(in.gcount()) != luma) throw DataError("truncated frame");
    if (chroma > 0) {
      in.read(skip.data(), static_cast<std::streamsize>(chroma));
      if (static_cast<std::size_t>(in.gcount()) != chroma) throw DataError("truncated frame");
    }
    frames.push_back(y);
  }
  check_frame_floor(frames.size());
  return make_video(std::move(frames), path.string(), VideoFormat::y4m);
}

VideoSource read_png_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  check_frame_floor(files.size());

  std::vector<cv::Mat> frames;
  for (const auto& f : files) {
    const cv::Mat img = cv::imread(f.string(), cv::IMREAD_UNCHANGED);
    if (img.empty()) throw DataError("cannot decode " + f.string());
    if (img.depth() != CV_8U) throw DataError("only 8-bit PNG frames are supported");
    cv::Mat y(img.rows, img.cols, CV_8UC1);
    if (img.channels() == 1) {
      img.copyTo(y);
    } else if (img.channels() == 3 || img.channels() == 4) {
      const int cn = img.channels();
      for (int r = 0; r < img.rows; ++r) {
        const unsigned char* src = img.ptr<unsigned char>(r);
        unsigned char* dst = y.ptr<unsigned char>(r);
        for (int c = 0; c < img.cols; ++c) dst[c] = bt601_luma(src[cn * c + 2], src[cn * c + 1], src[cn * c]);
      }
    } else {
      throw DataError("unsupported channel count in " + f.string());
    }
    if (!frames.empty() && y.size() != frames.front().size()) throw DataError("inconsistent frame sizes");
    frames.push_back(y);
  }
  return make_video(std::move(frames), dir.string(), VideoFormat::png_sequence);
}

void write_y4m(const fs::path& path, const VideoSource& video, int fps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "YUV4MPEG2 W" << video.width << " H" << video.height << " F" << fps << ":1 Ip A1:1 C420jpeg\n";
  const std::size_t chroma = 2 * static_cast<std::size_t>((video.width + 1) / 2) * ((video.height + 1) / 2);
  const std::vector<char> neutral(chroma, static_cast<char>(128));
  for (const auto& f : video.frames) {
    out << "FRAME\n";
    const cv::Mat y = f.isContinuous() ? f : f.clone();
    out.write(reinterpret_cast<const char*>(y.data), static_cast<std::streamsize>(y.total()));
    out.write(neutral.data(), static_cast<std::streamsize>(neutral.size()));
  }
  if (!out) throw DataError("write failed for " + path.string());
}

void write_png_sequence(const fs::path& dir, const VideoSource& video) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "%05zu.png", i);
    if (!cv::imwrite((dir / name).string(), video.frames[i])) throw DataError("cannot write " + (dir / name).string());
  }
}

}  // namespace emvqm
