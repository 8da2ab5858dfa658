#include "tpseg/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace tpseg::data {
namespace fs = std::filesystem;

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    ManifestEntry e;
    int labeled = 0;
    if (!(ss >> e.seq >> e.t >> e.frame >> e.mask_binary >> e.mask_part >>
          e.mask_type >> e.flow >> labeled))
      throw FormatError("malformed manifest line " + std::to_string(lineno) +
                        " in " + path);
    e.labeled = labeled != 0;
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path);
  out << "# tpseg manifest v1\n"
      << "# seq t frame mask_binary mask_part mask_type flow labeled\n";
  for (const auto& e : entries)
    out << e.seq << " " << e.t << " " << e.frame << " " << e.mask_binary << " "
        << e.mask_part << " " << e.mask_type << " " << e.flow << " "
        << (e.labeled ? 1 : 0) << "\n";
  if (!out) throw DataError("failed writing manifest " + path);
}

std::string flow_cache_name(const std::string& seq, int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%03d.flo", t);
  return seq + buf;
}

std::vector<ManifestEntry> write_sequence(const synth::GeneratedSequence& gs,
                                          const std::string& dir,
                                          const std::string& seq_name,
                                          int label_interval) {
  fs::create_directories(fs::path(dir) / seq_name);
  std::vector<ManifestEntry> entries;
  char buf[32];
  for (std::size_t t = 0; t < gs.frames.size(); ++t) {
    ManifestEntry e;
    e.seq = seq_name;
    e.t = int(t);
    std::snprintf(buf, sizeof buf, "%03zu", t);
    const std::string stem = seq_name + "/";
    e.frame = stem + "frame_" + buf + ".pgm";
    e.mask_binary = stem + "mask_binary_" + buf + ".pgm";
    e.mask_part = stem + "mask_part_" + buf + ".pgm";
    e.mask_type = stem + "mask_type_" + buf + ".pgm";
    e.flow = t == 0 ? "-" : stem + "flow_" + buf + ".flo";
    e.labeled = label_interval <= 1 || (int(t) % label_interval == 0);

    const fs::path root(dir);
    img::write_pnm(gs.frames[t], (root / e.frame).string());
    img::write_mask_pgm(gs.mask_binary[t], (root / e.mask_binary).string());
    img::write_mask_pgm(gs.mask_part[t], (root / e.mask_part).string());
    img::write_mask_pgm(gs.mask_type[t], (root / e.mask_type).string());
    if (t > 0) flow::write_flo(gs.flows[t], (root / e.flow).string());
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<SequenceData> load_sequences(const std::string& manifest_path,
                                         const std::string& task,
                                         const std::string& flow_source,
                                         const std::string& flow_cache,
                                         int label_interval) {
  const auto entries = read_manifest(manifest_path);
  if (entries.empty()) throw DataError("manifest is empty: " + manifest_path);
  const fs::path root = fs::path(manifest_path).parent_path();

  // Group by sequence id, preserving first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ManifestEntry*>> by_seq;
  for (const auto& e : entries) {
    auto& v = by_seq[e.seq];
    if (v.empty()) order.push_back(e.seq);
    v.push_back(&e);
  }

  std::vector<SequenceData> out;
  for (const auto& name : order) {
    auto& ptrs = by_seq[name];
    SequenceData sd;
    sd.name = name;
    sd.flows.resize(ptrs.size());
    sd.has_flows = flow_source != "none";
    for (std::size_t i = 0; i < ptrs.size(); ++i) {
      const ManifestEntry& e = *ptrs[i];
      if (e.t != int(i))
        throw DataError("manifest sequence " + name +
                        " has non-contiguous frame indices");
      sd.frames.push_back(img::read_pnm((root / e.frame).string()));
      const std::string& mask_path = task == "binary" ? e.mask_binary
                                     : task == "part" ? e.mask_part
                                                      : e.mask_type;
      sd.masks.push_back(img::read_mask_pgm((root / mask_path).string()));
      const bool lab =
          label_interval <= 0 ? e.labeled : (e.t % label_interval == 0);
      sd.labeled.push_back(lab ? 1 : 0);
      if (i > 0 && flow_source == "ground_truth") {
        if (e.flow == "-")
          throw DataError("manifest sequence " + name +
                          " is missing a ground-truth flow for frame " +
                          std::to_string(e.t));
        sd.flows[i] = flow::read_flo((root / e.flow).string());
      } else if (i > 0 && flow_source == "estimated") {
        const fs::path p = fs::path(flow_cache) / flow_cache_name(name, int(i));
        if (!fs::exists(p))
          throw DataError("flow cache is missing " + p.string());
        sd.flows[i] = flow::read_flo(p.string());
      }
    }
    out.push_back(std::move(sd));
  }
  return out;
}

}  // namespace tpseg::data
