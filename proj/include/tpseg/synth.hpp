#pragma once

#include <vector>

#include "tpseg/flow.hpp"
#include "tpseg/image.hpp"

namespace tpseg::synth {

// Rigid body pose: image point = center + scale * R(angle) * local point.
struct Pose {
  double cx = 0, cy = 0;
  double angle = 0;
  double scale = 1;
};

// Instrument-like tool in local coordinates (tip toward +x, centered):
// capsule shaft, wider wrist band, wedge jaw tapering to the tip.
struct InstrumentSpec {
  int type_id = 1;  // 1..3, selects texture family and width scaling
  double shaft_len = 21, shaft_width = 12;
  double wrist_len = 5, wrist_width = 17;
  double jaw_len = 10, jaw_width = 15;

  double cx = 32, cy = 32, angle = 0, scale = 1;  // pose at frame 0
  double vel_x = 0, vel_y = 0;  // px/frame; reflected at the canvas margin
  double ang_vel = 0;           // radians/frame
  double zoom_rate = 1.0;       // per-frame scale factor
  int zoom_period = 8;          // frames between zoom direction flips

  double total_len() const { return shaft_len + wrist_len + jaw_len; }
  // Rotation-safe bounding radius around the pose center.
  double extent() const;
};

struct SceneSpec {
  int width = 64, height = 64;
  int frames = 30;
  uint64_t seed = 1;
  std::vector<InstrumentSpec> instruments;
  int distractors = 1;  // tool-textured capsules baked into the background
  double drift_x = 0.5, drift_y = -0.3;  // background drift, px/frame
  double pan_x = 0, pan_y = 0;           // whole-canvas camera pan, px/frame
  int pan_period = 8;                    // frames between pan reversals
};

struct GeneratedSequence {
  std::vector<img::Frame> frames;
  std::vector<img::LabelMask> mask_binary;  // 0 background, 1 instrument
  std::vector<img::LabelMask> mask_part;    // 0 bg, 1 shaft, 2 wrist, 3 jaw
  std::vector<img::LabelMask> mask_type;    // 0 bg, type id otherwise
  // flows[t] maps frame t-1 to frame t, for t >= 1; flows[0] is empty.
  std::vector<flow::FlowField> flows;
};

// Deterministic per spec.seed. Throws DataError when a trajectory violates
// the 2 px canvas margin at any frame.
GeneratedSequence generate(const SceneSpec& spec);

// Randomized spec within the default distribution bounds: one instrument,
// one distractor, bounded translation/rotation/zoom, smooth drifting noise.
SceneSpec default_scene(uint64_t seed, int frames = 30);

// The stress specs: no instrument at all, a perfectly still instrument, and
// a whole-canvas camera pan of 3 px/frame.
std::vector<SceneSpec> edge_case_suite(uint64_t seed);

int num_classes_for_task(const std::string& task);

}  // namespace tpseg::synth
