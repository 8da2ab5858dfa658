#include "tpseg/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace tpseg::io {

uint32_t crc32(const void* data, std::size_t n, uint32_t seed) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t crc = seed ^ 0xFFFFFFFFu;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

namespace {

// Little-endian host assumed, as elsewhere in the on-disk formats.
template <typename T>
void put(std::vector<char>& buf, T v) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.insert(buf.end(), tmp, tmp + sizeof(T));
}

void put_bytes(std::vector<char>& buf, const void* p, std::size_t n) {
  const char* c = static_cast<const char*>(p);
  buf.insert(buf.end(), c, c + n);
}

struct Reader {
  const char* p;
  const char* end;
  std::string path;

  template <typename T>
  T take() {
    if (p + sizeof(T) > end)
      throw FormatError("truncated checkpoint " + path);
    T v;
    std::memcpy(&v, p, sizeof(T));
    p += sizeof(T);
    return v;
  }
  void take_bytes(void* dst, std::size_t n) {
    if (p + n > end) throw FormatError("truncated checkpoint " + path);
    std::memcpy(dst, p, n);
    p += n;
  }
};

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::vector<char> buf;
  put_bytes(buf, "TPSC", 4);
  put<uint32_t>(buf, c.version);
  put<uint64_t>(buf, c.config_echo.size());
  put_bytes(buf, c.config_echo.data(), c.config_echo.size());
  put<int64_t>(buf, c.step);
  put<uint32_t>(buf, uint32_t(c.params.named.size()));
  for (const auto& [name, t] : c.params.named) {
    put<uint32_t>(buf, uint32_t(name.size()));
    put_bytes(buf, name.data(), name.size());
    put<uint32_t>(buf, uint32_t(t.shape().size()));
    for (int d : t.shape()) put<int64_t>(buf, d);
    put_bytes(buf, t.values().data(), t.values().size() * sizeof(double));
  }
  const bool has_adam = c.adam.initialized();
  put<uint8_t>(buf, has_adam ? 1 : 0);
  if (has_adam) {
    if (c.adam.m.size() != c.params.named.size())
      throw DataError("checkpoint: optimizer state does not match parameters");
    put<int64_t>(buf, c.adam.t);
    for (std::size_t i = 0; i < c.adam.m.size(); ++i) {
      put_bytes(buf, c.adam.m[i].data(), c.adam.m[i].size() * sizeof(double));
      put_bytes(buf, c.adam.v[i].data(), c.adam.v[i].size() * sizeof(double));
    }
  }
  put<uint32_t>(buf, crc32(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw DataError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  if (buf.size() < 8 || std::memcmp(buf.data(), "TPSC", 4) != 0)
    throw FormatError("bad checkpoint magic in " + path);
  const uint32_t stored_crc = [&] {
    uint32_t v;
    std::memcpy(&v, buf.data() + buf.size() - 4, 4);
    return v;
  }();
  if (crc32(buf.data(), buf.size() - 4) != stored_crc)
    throw FormatError("checkpoint checksum mismatch in " + path);

  Reader r{buf.data() + 4, buf.data() + buf.size() - 4, path};
  Checkpoint c;
  c.version = r.take<uint32_t>();
  if (c.version != 1)
    throw FormatError("unsupported checkpoint version in " + path);
  const uint64_t echo_len = r.take<uint64_t>();
  c.config_echo.resize(echo_len);
  r.take_bytes(c.config_echo.data(), echo_len);
  c.step = r.take<int64_t>();
  const uint32_t nparams = r.take<uint32_t>();
  std::vector<std::size_t> sizes;
  for (uint32_t i = 0; i < nparams; ++i) {
    std::string name(r.take<uint32_t>(), '\0');
    r.take_bytes(name.data(), name.size());
    std::vector<int> shape(r.take<uint32_t>());
    for (auto& d : shape) d = int(r.take<int64_t>());
    const std::size_t n = ad::shape_numel(shape);
    std::vector<double> values(n);
    r.take_bytes(values.data(), n * sizeof(double));
    sizes.push_back(n);
    c.params.named.emplace_back(
        name, ad::Tensor::leaf(std::move(shape), std::move(values), true));
  }
  if (r.take<uint8_t>() != 0) {
    c.adam.t = r.take<int64_t>();
    c.adam.m.resize(nparams);
    c.adam.v.resize(nparams);
    for (uint32_t i = 0; i < nparams; ++i) {
      c.adam.m[i].resize(sizes[i]);
      r.take_bytes(c.adam.m[i].data(), sizes[i] * sizeof(double));
      c.adam.v[i].resize(sizes[i]);
      r.take_bytes(c.adam.v[i].data(), sizes[i] * sizeof(double));
    }
  }
  if (r.p != r.end) throw FormatError("trailing bytes in checkpoint " + path);
  return c;
}

}  // namespace tpseg::io
