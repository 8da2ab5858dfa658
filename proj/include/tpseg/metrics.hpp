#pragma once

#include <string>
#include <vector>

#include "tpseg/image.hpp"

namespace tpseg::metrics {

// Per-class overlap scores for positive classes 1..C-1. A class absent from
// both prediction and ground truth is marked not present and excluded from
// the frame mean; absent from exactly one side scores 0. A frame where no
// positive class is present on either side scores 1 (empty-scene convention).
struct FrameScore {
  std::vector<double> iou;       // size C, entries 0 and absent classes = 0
  std::vector<double> dice;      // same layout
  std::vector<bool> present;     // class seen in pred or gt
  double mean_iou = 1.0;
  double mean_dice = 1.0;
};

FrameScore score_frame(const img::LabelMask& pred, const img::LabelMask& gt,
                       int num_classes);

// Convenience wrappers matching the scoring surface one metric at a time.
std::vector<double> iou(const img::LabelMask& pred, const img::LabelMask& gt,
                        int num_classes);
std::vector<double> dice(const img::LabelMask& pred, const img::LabelMask& gt,
                         int num_classes);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population std
  int count = 0;
};

Aggregate aggregate(const std::vector<double>& values);

struct MetricReport {
  int num_classes = 0;
  std::vector<FrameScore> frames;
  Aggregate iou;   // over frame means
  Aggregate dice;  // over frame means
  // Per positive class, aggregated over frames where the class is present.
  std::vector<Aggregate> class_iou;
  std::vector<Aggregate> class_dice;
};

MetricReport build_report(const std::vector<FrameScore>& frames,
                          int num_classes);

void write_report_csv(const MetricReport& r, const std::string& path);
// Aligned text table, one row per model label.
std::string format_report_table(const std::string& label,
                                const MetricReport& r);

}  // namespace tpseg::metrics
