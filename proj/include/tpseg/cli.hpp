#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tpseg/flow.hpp"
#include "tpseg/runconfig.hpp"

namespace tpseg::cli {

struct GendataArgs {
  std::string out;
  int seqs = 10;
  int frames = 30;
  uint64_t seed = 42;
  int canvas = 64;
  int label_interval = 1;
  int split_train = 0;  // >0: first N sequences to manifest_train.txt, rest to manifest_test.txt
  bool edge_cases = false;  // append the stress sequences
};

struct FlowArgs {
  std::string manifest;
  std::string out;
  flow::FlowConfig cfg;
};

struct EvalArgs {
  std::string checkpoint;
  std::string manifest;
  std::string report_dir;
  bool overlays = false;
};

struct PropagateArgs {
  std::string mask;
  std::string flow;
  std::string out;
  int radius = 2;
};

int cmd_gendata(const GendataArgs& args);
int cmd_flow(const FlowArgs& args);
int cmd_train(const io::RunConfig& cfg);
int cmd_eval(const EvalArgs& args);
int cmd_propagate(const PropagateArgs& args);

// Maps thrown Error kinds onto process exit codes (usage 1, data 2,
// numeric 3); unexpected exceptions map to 2.
int run_guarded(const std::function<int()>& fn);

}  // namespace tpseg::cli
