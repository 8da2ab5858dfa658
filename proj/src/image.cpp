#include "tpseg/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace tpseg::img {
namespace {

// PNM header token reader: skips whitespace and '#' comment lines.
int read_token(std::istream& in, const std::string& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) throw FormatError("truncated PNM header in " + path);
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw FormatError("malformed PNM header in " + path);
  return value;
}

std::vector<uint8_t> read_payload(std::istream& in, std::size_t n,
                                  const std::string& path) {
  std::vector<uint8_t> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(n));
  if (std::size_t(in.gcount()) != n)
    throw FormatError("truncated PNM payload in " + path);
  return buf;
}

}  // namespace

Frame read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  int channels;
  if (m0 == 'P' && m1 == '5')
    channels = 1;
  else if (m0 == 'P' && m1 == '6')
    channels = 3;
  else
    throw FormatError("bad PNM magic in " + path);
  const int w = read_token(in, path);
  const int h = read_token(in, path);
  const int maxval = read_token(in, path);
  if (w <= 0 || h <= 0) throw FormatError("bad PNM dimensions in " + path);
  if (maxval != 255) throw FormatError("unsupported PNM maxval in " + path);
  const auto buf = read_payload(in, std::size_t(w) * h * channels, path);
  Frame f(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        f.at(c, y, x) =
            buf[(std::size_t(y) * w + x) * channels + c] / 255.0;
  return f;
}

void write_pnm(const Frame& f, const std::string& path) {
  if (f.channels != 1 && f.channels != 3)
    throw DataError("write_pnm: frame must have 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path);
  out << (f.channels == 1 ? "P5" : "P6") << "\n"
      << f.width << " " << f.height << "\n255\n";
  std::vector<uint8_t> buf(std::size_t(f.width) * f.height * f.channels);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      for (int c = 0; c < f.channels; ++c) {
        const double v = std::clamp(f.at(c, y, x), 0.0, 1.0);
        buf[(std::size_t(y) * f.width + x) * f.channels + c] =
            uint8_t(std::lround(v * 255.0));
      }
  out.write(reinterpret_cast<const char*>(buf.data()),
            std::streamsize(buf.size()));
  if (!out) throw DataError("failed writing image " + path);
}

LabelMask read_mask_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open mask " + path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '5') throw FormatError("mask must be P5 PGM: " + path);
  const int w = read_token(in, path);
  const int h = read_token(in, path);
  const int maxval = read_token(in, path);
  if (maxval != 255) throw FormatError("unsupported mask maxval in " + path);
  const auto buf = read_payload(in, std::size_t(w) * h, path);
  LabelMask m(w, h);
  m.ids.assign(buf.begin(), buf.end());
  return m;
}

void write_mask_pgm(const LabelMask& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write mask " + path);
  out << "P5\n" << m.width << " " << m.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(m.ids.data()),
            std::streamsize(m.ids.size()));
  if (!out) throw DataError("failed writing mask " + path);
}

}  // namespace tpseg::img
