#include "tpseg/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tpseg/checkpoint.hpp"
#include "tpseg/dataset.hpp"
#include "tpseg/metrics.hpp"
#include "tpseg/synth.hpp"
#include "tpseg/train.hpp"

namespace tpseg::cli {
namespace fs = std::filesystem;

int run_guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    std::cerr << "tpseg: error: " << e.what() << "\n";
    return int(e.kind);
  } catch (const std::exception& e) {
    std::cerr << "tpseg: error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_gendata(const GendataArgs& args) {
  if (args.out.empty()) throw UsageError("gendata: --out is required");
  if (args.seqs < 1 || args.frames < 2)
    throw UsageError("gendata: need at least 1 sequence of 2 frames");
  if (args.canvas % 32 != 0)
    throw UsageError("gendata: canvas must be divisible by 32");
  fs::create_directories(args.out);

  std::vector<data::ManifestEntry> all, train, test;
  char name[32];
  for (int i = 0; i < args.seqs; ++i) {
    synth::SceneSpec spec = synth::default_scene(args.seed + uint64_t(i), args.frames);
    spec.width = args.canvas;
    spec.height = args.canvas;
    std::snprintf(name, sizeof name, "seq%03d", i);
    auto entries = data::write_sequence(synth::generate(spec), args.out, name,
                                        args.label_interval);
    all.insert(all.end(), entries.begin(), entries.end());
    auto& side = (args.split_train > 0 && i >= args.split_train) ? test : train;
    side.insert(side.end(), entries.begin(), entries.end());
  }
  if (args.edge_cases) {
    auto specs = synth::edge_case_suite(args.seed + 1000);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      specs[i].width = args.canvas;
      specs[i].height = args.canvas;
      std::snprintf(name, sizeof name, "edge%03zu", i);
      auto entries = data::write_sequence(synth::generate(specs[i]), args.out,
                                          name, args.label_interval);
      all.insert(all.end(), entries.begin(), entries.end());
      train.insert(train.end(), entries.begin(), entries.end());
    }
  }
  data::write_manifest((fs::path(args.out) / "manifest.txt").string(), all);
  if (args.split_train > 0) {
    data::write_manifest((fs::path(args.out) / "manifest_train.txt").string(),
                         train);
    data::write_manifest((fs::path(args.out) / "manifest_test.txt").string(),
                         test);
  }
  std::cout << "wrote " << all.size() << " frames under " << args.out << "\n";
  return 0;
}

int cmd_flow(const FlowArgs& args) {
  if (args.manifest.empty() || args.out.empty())
    throw UsageError("flow: --manifest and --out are required");
  const auto seqs =
      data::load_sequences(args.manifest, "binary", "none", "", 0);
  fs::create_directories(args.out);

  struct Pair {
    const data::SequenceData* seq;
    int t;
  };
  std::vector<Pair> pairs;
  for (const auto& s : seqs)
    for (int t = 1; t < int(s.frames.size()); ++t) pairs.push_back({&s, t});

  parallel_for(int(pairs.size()), [&](int i) {
    const auto& [seq, t] = pairs[std::size_t(i)];
    flow::FlowField f = flow::estimate_flow(seq->frames[std::size_t(t - 1)],
                                            seq->frames[std::size_t(t)], args.cfg);
    flow::write_flo(f, (fs::path(args.out) /
                        data::flow_cache_name(seq->name, t)).string());
  });
  std::cout << "estimated " << pairs.size() << " flow fields into " << args.out
            << "\n";
  return 0;
}

int cmd_train(const io::RunConfig& cfg) {
  cfg.validate();
  if (cfg.manifest.empty()) throw UsageError("train: manifest is required");
  if (cfg.checkpoint.empty()) throw UsageError("train: checkpoint path is required");

  const bool needs_flow =
      cfg.prior_mode == "flow" || (cfg.semi && cfg.label_interval != 1);
  const auto seqs = data::load_sequences(
      cfg.manifest, cfg.task, needs_flow ? cfg.flow_source : "none",
      cfg.flow_cache, cfg.label_interval);

  const net::NetworkConfig nc = cfg.network_config();
  net::NetParams params = net::init_params(nc, cfg.seed);
  train::TrainState state;
  state.seed = cfg.seed;
  train::LossConfig loss_cfg;
  loss_cfg.alpha = cfg.parse_alpha();
  if (loss_cfg.alpha.empty())
    loss_cfg.alpha = train::auto_class_weights(seqs, nc.num_classes);
  loss_cfg.beta = cfg.beta;
  loss_cfg.semi = cfg.semi;
  train::AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;

  std::ofstream log;
  if (!cfg.loss_log.empty()) {
    log.open(cfg.loss_log);
    if (!log) throw DataError("cannot write loss log " + cfg.loss_log);
    log << "step,frame_index,loss_kind,loss_value\n";
  }
  for (int e = 0; e < cfg.epochs; ++e) {
    auto logs = train::train_epoch(seqs, nc, params, state, loss_cfg, adam_cfg,
                                   cfg.dilation_radius, e);
    double sum = 0.0;
    for (const auto& l : logs) {
      sum += l.value;
      if (log) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%lld,%d,%s,%.12g\n",
                      (long long)l.step, l.frame_index, l.kind, l.value);
        log << buf;
      }
    }
    std::cout << "epoch " << e << ": steps=" << logs.size()
              << " mean_loss=" << (logs.empty() ? 0.0 : sum / double(logs.size()))
              << "\n";
  }

  io::Checkpoint ckpt;
  ckpt.config_echo = cfg.echo();
  ckpt.step = state.step;
  ckpt.params = std::move(params);
  ckpt.adam = std::move(state.adam);
  io::save_checkpoint(ckpt, cfg.checkpoint);
  std::cout << "saved checkpoint " << cfg.checkpoint << " at step "
            << ckpt.step << "\n";
  return 0;
}

namespace {

// Prediction tinted red, finest attention tinted green, over the gray frame.
img::Frame make_overlay(const img::Frame& frame, const img::LabelMask& pred,
                        const net::ForwardResult& fwd) {
  img::Frame out(frame.width, frame.height, 3);
  const auto& att = fwd.attention[4];
  const int ah = att.dim(2), aw = att.dim(3);
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x) {
      double g = 0.0;
      for (int c = 0; c < frame.channels; ++c) g += frame.at(c, y, x);
      g /= frame.channels;
      const double a =
          att.values()[std::size_t(y * ah / frame.height) * aw + x * aw / frame.width];
      const bool fg = pred.at(y, x) != 0;
      out.at(0, y, x) = fg ? 0.5 * g + 0.5 : g;
      out.at(1, y, x) = std::min(1.0, g * (1.0 - a) + a);
      out.at(2, y, x) = fg ? 0.5 * g : g;
    }
  return out;
}

}  // namespace

int cmd_eval(const EvalArgs& args) {
  if (args.checkpoint.empty() || args.manifest.empty() || args.report_dir.empty())
    throw UsageError("eval: --checkpoint, --manifest and --report-dir are required");
  io::Checkpoint ckpt = io::load_checkpoint(args.checkpoint);
  io::RunConfig cfg = io::parse_run_config_text(ckpt.config_echo, {});
  const net::NetworkConfig nc = cfg.network_config();

  const bool needs_flow = cfg.prior_mode == "flow";
  const auto seqs = data::load_sequences(
      args.manifest, cfg.task, needs_flow ? cfg.flow_source : "none",
      cfg.flow_cache, 0);

  fs::create_directories(args.report_dir);
  train::EvalHook hook;
  if (args.overlays) {
    hook = [&](const data::SequenceData& seq, int t,
               const net::ForwardResult& fwd, const img::LabelMask& pred) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "_%03d.ppm", t);
      img::write_pnm(make_overlay(seq.frames[std::size_t(t)], pred, fwd),
                     (fs::path(args.report_dir) / ("overlay_" + seq.name + buf))
                         .string());
    };
  }
  const auto report = train::evaluate_sequences(seqs, nc, ckpt.params,
                                                cfg.dilation_radius, hook);
  metrics::write_report_csv(
      report, (fs::path(args.report_dir) / "report.csv").string());
  const std::string table =
      metrics::format_report_table("prior=" + cfg.prior_mode, report);
  std::ofstream tout((fs::path(args.report_dir) / "report.txt").string());
  tout << table;
  std::cout << table;
  return 0;
}

int cmd_propagate(const PropagateArgs& args) {
  if (args.mask.empty() || args.flow.empty() || args.out.empty())
    throw UsageError("propagate: --mask, --flow and --out are required");
  if (args.radius < 0) throw UsageError("propagate: radius must be >= 0");
  img::Frame in = img::read_pnm(args.mask);
  if (in.channels != 1) throw DataError("propagate: mask must be grayscale");
  flow::FlowField f = flow::read_flo(args.flow);
  if (f.width != in.width || f.height != in.height)
    throw DataError("propagate: flow dims do not match mask");
  flow::PriorMap m(in.width, in.height);
  m.p = in.v;
  flow::PriorMap out = flow::dilate(flow::apply_flow(m, f), args.radius);
  img::Frame of(in.width, in.height, 1);
  of.v = out.p;
  img::write_pnm(of, args.out);
  return 0;
}

}  // namespace tpseg::cli
