#include "tpseg/runconfig.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tpseg/synth.hpp"

namespace tpseg::io {
namespace {

void apply_kv(RunConfig& c, const std::string& key, const std::string& value) {
  auto to_int = [&](const std::string& v) {
    try {
      return std::stoi(v);
    } catch (...) {
      throw UsageError("config key " + key + ": bad integer '" + v + "'");
    }
  };
  auto to_double = [&](const std::string& v) {
    try {
      return std::stod(v);
    } catch (...) {
      throw UsageError("config key " + key + ": bad number '" + v + "'");
    }
  };
  auto to_bool = [&](const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw UsageError("config key " + key + ": bad boolean '" + v + "'");
  };
  if (key == "task") c.task = value;
  else if (key == "prior_mode") c.prior_mode = value;
  else if (key == "label_interval") c.label_interval = to_int(value);
  else if (key == "semi") c.semi = to_bool(value);
  else if (key == "lr") c.lr = to_double(value);
  else if (key == "epochs") c.epochs = to_int(value);
  else if (key == "seed") c.seed = uint64_t(std::stoull(value));
  else if (key == "manifest") c.manifest = value;
  else if (key == "flow_source") c.flow_source = value;
  else if (key == "flow_cache") c.flow_cache = value;
  else if (key == "checkpoint") c.checkpoint = value;
  else if (key == "loss_log") c.loss_log = value;
  else if (key == "dilation_radius") c.dilation_radius = to_int(value);
  else if (key == "beta") c.beta = to_double(value);
  else if (key == "alpha") c.alpha = value;
  else if (key == "upsample") c.upsample = value;
  else if (key == "in_channels") c.in_channels = to_int(value);
  else throw UsageError("unknown config key: " + key);
}

void apply_line(RunConfig& c, const std::string& raw, const std::string& where) {
  std::string line = raw;
  if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
  const auto first = line.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return;
  const auto last = line.find_last_not_of(" \t\r\n");
  line = line.substr(first, last - first + 1);
  const auto eq = line.find('=');
  if (eq == std::string::npos)
    throw UsageError("malformed config entry '" + line + "' in " + where);
  apply_kv(c, line.substr(0, eq), line.substr(eq + 1));
}

}  // namespace

int RunConfig::num_classes() const { return synth::num_classes_for_task(task); }

net::NetworkConfig RunConfig::network_config() const {
  net::NetworkConfig nc;
  nc.in_channels = in_channels;
  nc.num_classes = num_classes();
  nc.prior_mode = net::prior_mode_from_string(prior_mode);
  if (upsample == "bilinear") nc.upsample = ad::Interp::Bilinear;
  else if (upsample == "nearest") nc.upsample = ad::Interp::Nearest;
  else throw UsageError("unknown upsample mode: " + upsample);
  return nc;
}

std::vector<double> RunConfig::parse_alpha() const {
  if (alpha == "auto") return {};
  std::vector<double> out;
  std::stringstream ss(alpha);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      throw UsageError("bad alpha entry '" + item + "'");
    }
  }
  if (int(out.size()) != num_classes())
    throw UsageError("alpha needs " + std::to_string(num_classes()) +
                     " entries for task " + task);
  for (double a : out)
    if (a <= 0.0) throw UsageError("alpha entries must be positive");
  return out;
}

void RunConfig::validate() const {
  network_config().validate();
  parse_alpha();
  if (label_interval < 0) throw UsageError("label_interval must be >= 0");
  if (lr <= 0.0) throw UsageError("lr must be positive");
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (beta <= 0.0) throw UsageError("beta must be positive");
  if (dilation_radius < 0) throw UsageError("dilation_radius must be >= 0");
  if (flow_source != "ground_truth" && flow_source != "estimated")
    throw UsageError("flow_source must be ground_truth or estimated");
  if (flow_source == "estimated" && flow_cache.empty())
    throw UsageError("flow_source=estimated requires flow_cache");
}

std::string RunConfig::echo() const {
  char buf[64];
  std::string s;
  auto kv = [&s](const std::string& k, const std::string& v) {
    s += k + "=" + v + "\n";
  };
  kv("task", task);
  kv("prior_mode", prior_mode);
  kv("label_interval", std::to_string(label_interval));
  kv("semi", semi ? "on" : "off");
  std::snprintf(buf, sizeof buf, "%.12g", lr);
  kv("lr", buf);
  kv("epochs", std::to_string(epochs));
  kv("seed", std::to_string(seed));
  kv("manifest", manifest);
  kv("flow_source", flow_source);
  kv("flow_cache", flow_cache);
  kv("checkpoint", checkpoint);
  kv("loss_log", loss_log);
  kv("dilation_radius", std::to_string(dilation_radius));
  std::snprintf(buf, sizeof buf, "%.12g", beta);
  kv("beta", buf);
  kv("alpha", alpha);
  kv("upsample", upsample);
  kv("in_channels", std::to_string(in_channels));
  return s;
}

RunConfig parse_run_config_text(const std::string& text,
                                const std::vector<std::string>& overrides) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) apply_line(c, line, "config");
  for (const auto& o : overrides) apply_line(c, o, "override");
  return c;
}

RunConfig parse_run_config(const std::string& path,
                           const std::vector<std::string>& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_run_config_text(text, overrides);
}

}  // namespace tpseg::io
