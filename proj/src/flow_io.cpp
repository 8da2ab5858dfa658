#include <cstring>
#include <fstream>

#include "tpseg/flow.hpp"

namespace tpseg::flow {
namespace {

// All fields are little-endian on disk; this code assumes a little-endian
// host (x86-64 / aarch64), which matches every supported target.
template <typename T>
void put(std::vector<char>& buf, T v) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.insert(buf.end(), tmp, tmp + sizeof(T));
}

template <typename T>
T take(const char*& p, const char* end, const std::string& path) {
  if (p + sizeof(T) > end) throw FormatError("truncated .flo payload in " + path);
  T v;
  std::memcpy(&v, p, sizeof(T));
  p += sizeof(T);
  return v;
}

}  // namespace

FlowField read_flo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open flow file " + path);
  std::vector<char> data((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  const char* p = data.data();
  const char* end = p + data.size();
  if (data.size() < 4 || std::memcmp(p, "PIEH", 4) != 0)
    throw FormatError("bad .flo magic in " + path);
  p += 4;
  const int32_t w = take<int32_t>(p, end, path);
  const int32_t h = take<int32_t>(p, end, path);
  if (w <= 0 || h <= 0 || int64_t(w) * h > (int64_t(1) << 30))
    throw FormatError(".flo dimensions out of range in " + path);
  FlowField f(w, h);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.dx[i] = take<float>(p, end, path);
    f.dy[i] = take<float>(p, end, path);
  }
  return f;
}

void write_flo(const FlowField& f, const std::string& path) {
  std::vector<char> buf;
  buf.reserve(12 + f.size() * 8);
  buf.insert(buf.end(), {'P', 'I', 'E', 'H'});
  put<int32_t>(buf, f.width);
  put<int32_t>(buf, f.height);
  for (std::size_t i = 0; i < f.size(); ++i) {
    put<float>(buf, float(f.dx[i]));
    put<float>(buf, float(f.dy[i]));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write flow file " + path);
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw DataError("failed writing flow file " + path);
}

FlowField reverse_flow(const FlowField& f) {
  FlowField r(f.width, f.height);
  for (std::size_t i = 0; i < f.size(); ++i) {
    r.dx[i] = -f.dx[i];
    r.dy[i] = -f.dy[i];
  }
  return r;
}

}  // namespace tpseg::flow
