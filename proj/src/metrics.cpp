#include "tpseg/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace tpseg::metrics {

FrameScore score_frame(const img::LabelMask& pred, const img::LabelMask& gt,
                       int num_classes) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw DimensionError("score_frame: mask dimension mismatch " +
                         std::to_string(pred.width) + "x" +
                         std::to_string(pred.height) + " vs " +
                         std::to_string(gt.width) + "x" +
                         std::to_string(gt.height));
  std::vector<std::int64_t> inter(std::size_t(num_classes), 0);
  std::vector<std::int64_t> np(std::size_t(num_classes), 0);
  std::vector<std::int64_t> ng(std::size_t(num_classes), 0);
  for (std::size_t i = 0; i < pred.ids.size(); ++i) {
    const int p = pred.ids[i], g = gt.ids[i];
    if (p >= num_classes || g >= num_classes)
      throw DataError("score_frame: label id out of range for " +
                      std::to_string(num_classes) + " classes");
    ++np[std::size_t(p)];
    ++ng[std::size_t(g)];
    if (p == g) ++inter[std::size_t(p)];
  }
  FrameScore s;
  s.iou.assign(std::size_t(num_classes), 0.0);
  s.dice.assign(std::size_t(num_classes), 0.0);
  s.present.assign(std::size_t(num_classes), false);
  double sum_iou = 0.0, sum_dice = 0.0;
  int counted = 0;
  for (int c = 1; c < num_classes; ++c) {
    const std::int64_t u = np[std::size_t(c)] + ng[std::size_t(c)] - inter[std::size_t(c)];
    if (u == 0) continue;  // absent from both sides
    s.present[std::size_t(c)] = true;
    s.iou[std::size_t(c)] = double(inter[std::size_t(c)]) / double(u);
    s.dice[std::size_t(c)] = 2.0 * double(inter[std::size_t(c)]) /
                             double(np[std::size_t(c)] + ng[std::size_t(c)]);
    sum_iou += s.iou[std::size_t(c)];
    sum_dice += s.dice[std::size_t(c)];
    ++counted;
  }
  if (counted > 0) {
    s.mean_iou = sum_iou / counted;
    s.mean_dice = sum_dice / counted;
  }  // else keep the empty-scene score of 1
  return s;
}

std::vector<double> iou(const img::LabelMask& pred, const img::LabelMask& gt,
                        int num_classes) {
  return score_frame(pred, gt, num_classes).iou;
}

std::vector<double> dice(const img::LabelMask& pred, const img::LabelMask& gt,
                         int num_classes) {
  return score_frame(pred, gt, num_classes).dice;
}

Aggregate aggregate(const std::vector<double>& values) {
  if (values.empty()) throw DataError("aggregate: no scores to aggregate");
  Aggregate a;
  a.count = int(values.size());
  double s = 0.0;
  for (double v : values) s += v;
  a.mean = s / double(values.size());
  double var = 0.0;
  for (double v : values) var += (v - a.mean) * (v - a.mean);
  a.stddev = std::sqrt(var / double(values.size()));
  return a;
}

MetricReport build_report(const std::vector<FrameScore>& frames,
                          int num_classes) {
  MetricReport r;
  r.num_classes = num_classes;
  r.frames = frames;
  std::vector<double> ious, dices;
  for (const auto& f : frames) {
    ious.push_back(f.mean_iou);
    dices.push_back(f.mean_dice);
  }
  r.iou = aggregate(ious);
  r.dice = aggregate(dices);
  r.class_iou.assign(std::size_t(num_classes), {});
  r.class_dice.assign(std::size_t(num_classes), {});
  for (int c = 1; c < num_classes; ++c) {
    std::vector<double> ci, cd;
    for (const auto& f : frames)
      if (f.present[std::size_t(c)]) {
        ci.push_back(f.iou[std::size_t(c)]);
        cd.push_back(f.dice[std::size_t(c)]);
      }
    if (!ci.empty()) {
      r.class_iou[std::size_t(c)] = aggregate(ci);
      r.class_dice[std::size_t(c)] = aggregate(cd);
    }
  }
  return r;
}

void write_report_csv(const MetricReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report " + path);
  out << "frame,mean_iou,mean_dice";
  for (int c = 1; c < r.num_classes; ++c)
    out << ",iou_c" << c << ",dice_c" << c << ",present_c" << c;
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < r.frames.size(); ++i) {
    const auto& f = r.frames[i];
    std::snprintf(buf, sizeof buf, "%zu,%.9f,%.9f", i, f.mean_iou, f.mean_dice);
    out << buf;
    for (int c = 1; c < r.num_classes; ++c) {
      std::snprintf(buf, sizeof buf, ",%.9f,%.9f,%d", f.iou[std::size_t(c)],
                    f.dice[std::size_t(c)], f.present[std::size_t(c)] ? 1 : 0);
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw DataError("failed writing report " + path);
}

std::string format_report_table(const std::string& label,
                                const MetricReport& r) {
  char line[256];
  std::string s;
  std::snprintf(line, sizeof line, "%-18s %-18s %-18s\n", "Method", "IoU (%)",
                "Dice (%)");
  s += line;
  char iou_s[64], dice_s[64];
  std::snprintf(iou_s, sizeof iou_s, "%.2f +- %.2f", 100.0 * r.iou.mean,
                100.0 * r.iou.stddev);
  std::snprintf(dice_s, sizeof dice_s, "%.2f +- %.2f", 100.0 * r.dice.mean,
                100.0 * r.dice.stddev);
  std::snprintf(line, sizeof line, "%-18s %-18s %-18s\n", label.c_str(), iou_s,
                dice_s);
  s += line;
  for (int c = 1; c < r.num_classes; ++c) {
    if (r.class_iou[std::size_t(c)].count == 0) continue;
    std::snprintf(iou_s, sizeof iou_s, "%.2f +- %.2f",
                  100.0 * r.class_iou[std::size_t(c)].mean,
                  100.0 * r.class_iou[std::size_t(c)].stddev);
    std::snprintf(dice_s, sizeof dice_s, "%.2f +- %.2f",
                  100.0 * r.class_dice[std::size_t(c)].mean,
                  100.0 * r.class_dice[std::size_t(c)].stddev);
    std::snprintf(line, sizeof line, "  class %-10d %-18s %-18s\n", c, iou_s,
                  dice_s);
    s += line;
  }
  return s;
}

}  // namespace tpseg::metrics
