#pragma once

#include <cstdint>
#include <string>

#include "tpseg/adam.hpp"
#include "tpseg/net.hpp"

namespace tpseg::io {

uint32_t crc32(const void* data, std::size_t n, uint32_t seed = 0);

// Versioned named-tensor container. Binary little-endian layout: magic
// "TPSC", format version, config echo text, step counter, named tensors
// (name, shape, float64 values), optimizer moments, then a CRC32 of all
// preceding bytes. Serialization is canonical: save -> load -> save is
// byte-identical, and any corrupted payload byte fails the checksum.
struct Checkpoint {
  uint32_t version = 1;
  std::string config_echo;
  int64_t step = 0;
  net::NetParams params;
  train::AdamState adam;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tpseg::io
