#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "emvqm/error.hpp"
#include "emvqm/optical_flow.hpp"

namespace fs = std::filesystem;

namespace emvqm {

namespace {

constexpr char kMagic[8] = {'E', 'M', 'V', 'Q', 'M', 'F', 'L', 'O'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw DataError("truncated flow file");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_plane(std::ostream& out, const cv::Mat& m) {
  for (int r = 0; r < m.rows; ++r) {
    const float* p = m.ptr<float>(r);
    for (int c = 0; c < m.cols; ++c) put_u32(out, std::bit_cast<std::uint32_t>(p[c]));
  }
}

cv::Mat get_plane(std::istream& in, int w, int h) {
  cv::Mat m(h, w, CV_32F);
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * 4);
  for (int r = 0; r < h; ++r) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw DataError("truncated flow file");
    float* p = m.ptr<float>(r);
    for (int c = 0; c < w; ++c) {
      const unsigned char* b = &buf[4 * c];
      p[c] = std::bit_cast<float>(static_cast<std::uint32_t>(b[0] | (b[1] << 8) | (b[2] << 16)) |
                                  (static_cast<std::uint32_t>(b[3]) << 24));
    }
  }
  return m;
}

}  // namespace

void write_flow_file(const fs::path& path, const FlowField& flow) {
  if (flow.u.type() != CV_32F || flow.v.type() != CV_32F || flow.u.size() != flow.v.size())
    throw DataError("flow planes must be matching float32 images");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(flow.u.cols));
  put_u32(out, static_cast<std::uint32_t>(flow.u.rows));
  put_plane(out, flow.u);
  put_plane(out, flow.v);
  if (!out) throw DataError("write failed for " + path.string());
}

FlowField read_flow_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError("not a flow file: " + path.string());
  const std::uint32_t w = get_u32(in), h = get_u32(in);
  if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) throw DataError("bad flow file size");
  FlowField f;
  f.u = get_plane(in, static_cast<int>(w), static_cast<int>(h));
  f.v = get_plane(in, static_cast<int>(w), static_cast<int>(h));
  return f;
}

fs::path flow_file_name(const fs::path& dir, int frame) {
  char name[32];
  std::snprintf(name, sizeof(name), "%05d.flo", frame);
  return dir / name;
}

InjectedFlow::Loader flow_directory(fs::path dir) {
  return [dir = std::move(dir)](int frame) { return read_flow_file(flow_file_name(dir, frame)); };
}

}  // namespace emvqm
