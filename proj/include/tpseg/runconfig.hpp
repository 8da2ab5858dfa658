#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tpseg/flow.hpp"
#include "tpseg/net.hpp"

namespace tpseg::io {

// Training/evaluation run settings. Serialized as a flat key=value text file;
// command-line overrides use the same key=value form.
struct RunConfig {
  std::string task = "binary";        // binary | part | type
  std::string prior_mode = "flow";    // none | raw | flow
  int label_interval = 0;             // 0 = honor manifest flags; k>0 = t%k==0
  bool semi = true;                   // consistency loss on unlabeled frames
  double lr = 2e-3;
  int epochs = 6;
  uint64_t seed = 1;
  std::string manifest;
  std::string flow_source = "ground_truth";  // ground_truth | estimated
  std::string flow_cache;                    // dir of estimated .flo files
  std::string checkpoint;                    // output path (train)
  std::string loss_log;                      // CSV output path (train)
  int dilation_radius = 2;
  double beta = 1.0;
  std::string alpha = "auto";  // auto | comma-separated per-class weights
  std::string upsample = "bilinear";  // bilinear | nearest
  int in_channels = 1;

  int num_classes() const;
  net::NetworkConfig network_config() const;
  std::vector<double> parse_alpha() const;  // empty when "auto"
  void validate() const;
  std::string echo() const;  // canonical key=value text
};

RunConfig parse_run_config(const std::string& path,
                           const std::vector<std::string>& overrides);
RunConfig parse_run_config_text(const std::string& text,
                                const std::vector<std::string>& overrides);

}  // namespace tpseg::io
