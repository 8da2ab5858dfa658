#pragma once

#include <string>
#include <vector>

#include "tpseg/flow.hpp"
#include "tpseg/image.hpp"
#include "tpseg/synth.hpp"

namespace tpseg::data {

// One manifest line: sequence id, frame index, frame/mask paths, the flow
// file mapping frame t-1 to t ("-" for the first frame), and the labeled
// flag. Paths are stored relative to the manifest file.
struct ManifestEntry {
  std::string seq;
  int t = 0;
  std::string frame;
  std::string mask_binary;
  std::string mask_part;
  std::string mask_type;
  std::string flow;  // "-" when absent
  bool labeled = true;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

// Writes frames/masks/ground-truth flows of one generated sequence under
// dir/<seq_name>/ and returns the manifest entries (paths relative to dir).
std::vector<ManifestEntry> write_sequence(const synth::GeneratedSequence& gs,
                                          const std::string& dir,
                                          const std::string& seq_name,
                                          int label_interval);

// A sequence materialized for training/evaluation on one task.
struct SequenceData {
  std::string name;
  std::vector<img::Frame> frames;
  std::vector<img::LabelMask> masks;
  std::vector<uint8_t> labeled;
  std::vector<flow::FlowField> flows;  // flows[t]: t-1 -> t; flows[0] empty
  bool has_flows = false;
};

// flow_source: "ground_truth" reads the manifest flow column, "estimated"
// reads <flow_cache>/<seq>_<t>.flo, "none" skips flows. label_interval 0
// honors manifest flags, k > 0 relabels as t % k == 0.
std::vector<SequenceData> load_sequences(const std::string& manifest_path,
                                         const std::string& task,
                                         const std::string& flow_source,
                                         const std::string& flow_cache,
                                         int label_interval);

std::string flow_cache_name(const std::string& seq, int t);

}  // namespace tpseg::data
