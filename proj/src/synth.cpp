#include "tpseg/synth.hpp"

#include <algorithm>
#include <cmath>

namespace tpseg::synth {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kMargin = 2.0;

struct Vec2 {
  double x = 0, y = 0;
};

Vec2 to_local(const Pose& p, double ix, double iy) {
  const double dx = (ix - p.cx) / p.scale, dy = (iy - p.cy) / p.scale;
  const double c = std::cos(p.angle), s = std::sin(p.angle);
  return {c * dx + s * dy, -s * dx + c * dy};
}

Vec2 to_image(const Pose& p, double lx, double ly) {
  const double c = std::cos(p.angle), s = std::sin(p.angle);
  return {p.cx + p.scale * (c * lx - s * ly),
          p.cy + p.scale * (s * lx + c * ly)};
}

// Part id at a local point: 0 none, 1 shaft, 2 wrist, 3 jaw.
int part_at(const InstrumentSpec& t, double lx, double ly) {
  const double half = t.total_len() / 2.0;
  const double jaw0 = half - t.jaw_len;
  if (lx >= jaw0 && lx <= half) {
    const double w = 0.5 * t.jaw_width * (half - lx) / t.jaw_len;
    if (std::abs(ly) <= w) return 3;
  }
  const double wrist0 = jaw0 - t.wrist_len;
  if (lx >= wrist0 && lx <= jaw0 && std::abs(ly) <= 0.5 * t.wrist_width)
    return 2;
  const double rs = 0.5 * t.shaft_width;
  const double s0 = -half + rs, s1 = wrist0;
  if (s1 > s0) {
    const double px = std::clamp(lx, s0, s1);
    const double dx = lx - px;
    if (dx * dx + ly * ly <= rs * rs) return 1;
  }
  return 0;
}

double texture_at(int type_id, double lx, double ly, double half_width) {
  switch (type_id) {
    case 1:
      return 0.62 + 0.18 * std::sin(kTwoPi * lx / 7.0);
    case 2: {
      const long cell = long(std::floor(lx / 3.0)) + long(std::floor(ly / 3.0));
      return (cell & 1) ? 0.54 : 0.74;
    }
    default: {
      const double rim = std::clamp(std::abs(ly) / std::max(half_width, 1.0),
                                    0.0, 1.0);
      return 0.80 - 0.24 * rim;
    }
  }
}

double InstrumentSpec_extent(const InstrumentSpec& t) {
  const double half = t.total_len() / 2.0;
  const double jaw0 = half - t.jaw_len;
  return std::max({half, std::hypot(jaw0, 0.5 * t.wrist_width),
                   std::hypot(jaw0 - t.wrist_len, 0.5 * t.wrist_width)});
}

// Smooth value-noise canvas with tool-textured distractor capsules baked in.
struct Background {
  int pad = 0;  // canvas extends [-pad, size+pad) in both axes
  int w = 0, h = 0;
  std::vector<double> v;

  double raw(int y, int x) const {
    return v[std::size_t(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
  }
  double sample(double x, double y) const {  // bilinear, canvas coordinates
    const double gx = x + pad, gy = y + pad;
    const double fx = std::floor(gx), fy = std::floor(gy);
    const int x0 = int(fx), y0 = int(fy);
    const double ax = gx - fx, ay = gy - fy;
    const double top = raw(y0, x0) * (1 - ax) + raw(y0, x0 + 1) * ax;
    const double bot = raw(y0 + 1, x0) * (1 - ax) + raw(y0 + 1, x0 + 1) * ax;
    return top * (1 - ay) + bot * ay;
  }
};

Background make_background(const SceneSpec& spec, Rng& rng, int pad) {
  Background bg;
  bg.pad = pad;
  bg.w = spec.width + 2 * pad;
  bg.h = spec.height + 2 * pad;
  bg.v.assign(std::size_t(bg.w) * bg.h, 0.0);

  // Value noise: coarse grid, bilinear blowup, one box blur.
  const int cell = 8;
  const int gw = bg.w / cell + 2, gh = bg.h / cell + 2;
  std::vector<double> grid(std::size_t(gw) * gh);
  for (auto& g : grid) g = rng.uniform(0.22, 0.6);
  for (int y = 0; y < bg.h; ++y)
    for (int x = 0; x < bg.w; ++x) {
      const double gx = double(x) / cell, gy = double(y) / cell;
      const int x0 = int(gx), y0 = int(gy);
      const double ax = gx - x0, ay = gy - y0;
      const double top = grid[std::size_t(y0) * gw + x0] * (1 - ax) +
                         grid[std::size_t(y0) * gw + x0 + 1] * ax;
      const double bot = grid[std::size_t(y0 + 1) * gw + x0] * (1 - ax) +
                         grid[std::size_t(y0 + 1) * gw + x0 + 1] * ax;
      bg.v[std::size_t(y) * bg.w + x] = top * (1 - ay) + bot * ay;
    }

  for (int d = 0; d < spec.distractors; ++d) {
    InstrumentSpec fake;
    fake.type_id = rng.uniform_int(1, 3);
    fake.shaft_len = rng.uniform(18.0, 28.0);
    fake.shaft_width = rng.uniform(8.0, 12.0);
    fake.wrist_len = 0.0;
    fake.wrist_width = 0.0;
    fake.jaw_len = 0.0;
    fake.jaw_width = 0.0;
    Pose pose;
    pose.cx = rng.uniform(4.0, double(spec.width - 4));
    pose.cy = rng.uniform(4.0, double(spec.height - 4));
    pose.angle = rng.uniform(0.0, kTwoPi);
    for (int y = 0; y < bg.h; ++y)
      for (int x = 0; x < bg.w; ++x) {
        const Vec2 q = to_local(pose, x - pad, y - pad);
        if (part_at(fake, q.x, q.y) != 0)
          bg.v[std::size_t(y) * bg.w + x] =
              texture_at(fake.type_id, q.x, q.y, 0.5 * fake.shaft_width);
      }
  }
  return bg;
}

Vec2 pan_delta(const SceneSpec& spec, int step) {  // step t-1 -> t, t = step+1
  if (spec.pan_x == 0.0 && spec.pan_y == 0.0) return {0.0, 0.0};
  const int phase = (step / std::max(spec.pan_period, 1)) % 2;
  const double s = phase == 0 ? 1.0 : -1.0;
  return {s * spec.pan_x, s * spec.pan_y};
}

std::vector<Pose> build_trajectory(const SceneSpec& spec,
                                   const InstrumentSpec& t) {
  std::vector<Pose> poses(std::size_t(spec.frames));
  Pose p{t.cx, t.cy, t.angle, t.scale};
  poses[0] = p;
  double vx = t.vel_x, vy = t.vel_y;
  const double ext = t.extent();
  for (int f = 1; f < spec.frames; ++f) {
    const int zphase = ((f - 1) / std::max(t.zoom_period, 1)) % 2;
    const double zr = t.zoom_rate == 1.0
                          ? 1.0
                          : (zphase == 0 ? t.zoom_rate : 1.0 / t.zoom_rate);
    const double ns = p.scale * zr;
    const Vec2 pd = pan_delta(spec, f - 1);
    const double lo_x = ext * ns + kMargin, hi_x = spec.width - 1 - ext * ns - kMargin;
    const double lo_y = ext * ns + kMargin, hi_y = spec.height - 1 - ext * ns - kMargin;
    double nx = p.cx + vx + pd.x;
    if (nx < lo_x || nx > hi_x) {
      vx = -vx;
      nx = p.cx + vx + pd.x;
    }
    double ny = p.cy + vy + pd.y;
    if (ny < lo_y || ny > hi_y) {
      vy = -vy;
      ny = p.cy + vy + pd.y;
    }
    // Zoom can tighten the margin band past a wall-hugging position; pull
    // back inside so only genuinely oversized specs fail validation.
    if (lo_x <= hi_x) nx = std::clamp(nx, lo_x, hi_x);
    if (lo_y <= hi_y) ny = std::clamp(ny, lo_y, hi_y);
    p.cx = nx;
    p.cy = ny;
    p.angle += t.ang_vel;
    p.scale = ns;
    poses[std::size_t(f)] = p;
  }
  return poses;
}

void validate_trajectory(const SceneSpec& spec, const InstrumentSpec& t,
                         const std::vector<Pose>& poses) {
  const double ext = t.extent();
  for (std::size_t f = 0; f < poses.size(); ++f) {
    const Pose& p = poses[f];
    const double r = ext * p.scale;
    if (p.cx - r < kMargin || p.cx + r > spec.width - 1 - kMargin ||
        p.cy - r < kMargin || p.cy + r > spec.height - 1 - kMargin)
      throw DataError("instrument trajectory exits canvas at frame " +
                      std::to_string(f));
  }
}

bool same_pose(const Pose& a, const Pose& b) {
  return a.cx == b.cx && a.cy == b.cy && a.angle == b.angle &&
         a.scale == b.scale;
}

}  // namespace

double InstrumentSpec::extent() const { return InstrumentSpec_extent(*this); }

GeneratedSequence generate(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0 || spec.frames <= 0)
    throw DataError("scene spec has empty canvas or no frames");
  Rng rng(spec.seed);

  // Accumulated background offset per frame (drift plus pan).
  std::vector<Vec2> off(std::size_t(spec.frames));
  double max_off = 0.0;
  for (int f = 1; f < spec.frames; ++f) {
    const Vec2 pd = pan_delta(spec, f - 1);
    off[std::size_t(f)].x = off[std::size_t(f - 1)].x + spec.drift_x + pd.x;
    off[std::size_t(f)].y = off[std::size_t(f - 1)].y + spec.drift_y + pd.y;
    max_off = std::max({max_off, std::abs(off[std::size_t(f)].x),
                        std::abs(off[std::size_t(f)].y)});
  }
  const int pad = int(std::ceil(max_off)) + 3;
  Background bg = make_background(spec, rng, pad);

  std::vector<std::vector<Pose>> trajs;
  for (const auto& inst : spec.instruments) {
    trajs.push_back(build_trajectory(spec, inst));
    validate_trajectory(spec, inst, trajs.back());
  }

  GeneratedSequence out;
  out.frames.reserve(std::size_t(spec.frames));
  out.flows.resize(std::size_t(spec.frames));

  // Earlier instruments draw on top.
  auto hit_instrument = [&](int f, double x, double y, Vec2* local) -> int {
    for (std::size_t k = 0; k < spec.instruments.size(); ++k) {
      const Vec2 q = to_local(trajs[k][std::size_t(f)], x, y);
      if (part_at(spec.instruments[k], q.x, q.y) != 0) {
        if (local) *local = q;
        return int(k);
      }
    }
    return -1;
  };

  for (int f = 0; f < spec.frames; ++f) {
    img::LabelMask mb(spec.width, spec.height), mp(spec.width, spec.height),
        mt(spec.width, spec.height);
    img::Frame frame(spec.width, spec.height, 1);

    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        Vec2 q;
        const int k = hit_instrument(f, x, y, &q);
        if (k >= 0) {
          const auto& inst = spec.instruments[std::size_t(k)];
          mb.at(y, x) = 1;
          mp.at(y, x) = uint8_t(part_at(inst, q.x, q.y));
          mt.at(y, x) = uint8_t(inst.type_id);
        }
        // Frames are antialiased with 2x2 supersampling; masks stay crisp.
        static const double offs[4][2] = {
            {-0.25, -0.25}, {0.25, -0.25}, {-0.25, 0.25}, {0.25, 0.25}};
        double acc = 0.0;
        for (const auto& o : offs) {
          const double sx = x + o[0], sy = y + o[1];
          Vec2 ql;
          const int kk = hit_instrument(f, sx, sy, &ql);
          if (kk >= 0) {
            const auto& inst = spec.instruments[std::size_t(kk)];
            acc += texture_at(inst.type_id, ql.x, ql.y,
                              0.5 * inst.shaft_width);
          } else {
            acc += bg.sample(sx - off[std::size_t(f)].x,
                             sy - off[std::size_t(f)].y);
          }
        }
        frame.at(0, y, x) =
            std::clamp(acc / 4.0 + rng.uniform(-0.015, 0.015), 0.0, 1.0);
      }

    out.frames.push_back(std::move(frame));
    out.mask_binary.push_back(std::move(mb));
    out.mask_part.push_back(std::move(mp));
    out.mask_type.push_back(std::move(mt));

    if (f >= 1) {
      flow::FlowField field(spec.width, spec.height);
      const Vec2 bg_delta = {off[std::size_t(f)].x - off[std::size_t(f - 1)].x,
                             off[std::size_t(f)].y - off[std::size_t(f - 1)].y};
      for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
          const std::size_t i = std::size_t(y) * spec.width + x;
          Vec2 q;
          const int k = hit_instrument(f - 1, x, y, &q);
          if (k < 0) {
            field.dx[i] = bg_delta.x;
            field.dy[i] = bg_delta.y;
            continue;
          }
          const Pose& pa = trajs[std::size_t(k)][std::size_t(f - 1)];
          const Pose& pb = trajs[std::size_t(k)][std::size_t(f)];
          if (same_pose(pa, pb)) {
            field.dx[i] = 0.0;
            field.dy[i] = 0.0;
          } else if (pa.angle == pb.angle && pa.scale == pb.scale) {
            field.dx[i] = pb.cx - pa.cx;  // pure translation stays exact
            field.dy[i] = pb.cy - pa.cy;
          } else {
            const Vec2 p2 = to_image(pb, q.x, q.y);
            field.dx[i] = p2.x - x;
            field.dy[i] = p2.y - y;
          }
        }
      out.flows[std::size_t(f)] = std::move(field);
    }
  }
  return out;
}

SceneSpec default_scene(uint64_t seed, int frames) {
  Rng rng(seed);
  SceneSpec spec;
  spec.frames = frames;
  spec.seed = seed;

  InstrumentSpec t;
  t.type_id = rng.uniform_int(1, 3);
  const double wmul = t.type_id == 1 ? 0.9 : (t.type_id == 2 ? 1.0 : 1.15);
  t.shaft_len = rng.uniform(18.0, 24.0);
  t.shaft_width = rng.uniform(11.0, 14.0) * wmul;
  t.wrist_len = rng.uniform(4.0, 6.0);
  t.wrist_width = t.shaft_width + rng.uniform(3.0, 5.0);
  t.jaw_len = rng.uniform(8.0, 12.0);
  t.jaw_width = t.shaft_width + rng.uniform(2.0, 4.0);
  const double ext = t.extent();
  t.cx = rng.uniform(ext + kMargin + 1.0, spec.width - 1 - ext - kMargin - 1.0);
  t.cy = rng.uniform(ext + kMargin + 1.0, spec.height - 1 - ext - kMargin - 1.0);
  t.angle = rng.uniform(0.0, kTwoPi);
  const double speed = rng.uniform(1.5, 3.2);
  const double dir = rng.uniform(0.0, kTwoPi);
  t.vel_x = speed * std::cos(dir);
  t.vel_y = speed * std::sin(dir);
  t.ang_vel = rng.uniform(-0.07, 0.07);  // within +-4 degrees
  t.zoom_rate = 1.0 + rng.uniform(-0.015, 0.015);
  spec.instruments.push_back(t);

  spec.distractors = 1;
  const double dmag = rng.uniform(0.3, 0.8);
  const double ddir = rng.uniform(0.0, kTwoPi);
  spec.drift_x = dmag * std::cos(ddir);
  spec.drift_y = dmag * std::sin(ddir);
  return spec;
}

std::vector<SceneSpec> edge_case_suite(uint64_t seed) {
  std::vector<SceneSpec> out;

  SceneSpec none = default_scene(seed, 16);
  none.instruments.clear();
  none.distractors = 0;
  out.push_back(none);

  SceneSpec still = default_scene(seed + 1, 16);
  still.instruments[0].vel_x = 0;
  still.instruments[0].vel_y = 0;
  still.instruments[0].ang_vel = 0;
  still.instruments[0].zoom_rate = 1.0;
  out.push_back(still);

  SceneSpec pan = default_scene(seed + 2, 16);
  auto& tool = pan.instruments[0];
  tool.vel_x = 0;
  tool.vel_y = 0;
  tool.ang_vel = 0;
  tool.zoom_rate = 1.0;
  // Compact tool so the pan sweep keeps the margin.
  tool.shaft_len = 16;
  tool.shaft_width = 10;
  tool.wrist_len = 4;
  tool.wrist_width = 14;
  tool.jaw_len = 8;
  tool.jaw_width = 12;
  tool.cx = 24;
  tool.cy = 32;
  pan.drift_x = 0;
  pan.drift_y = 0;
  pan.pan_x = 3.0;
  pan.pan_y = 0.0;
  pan.pan_period = 5;
  out.push_back(pan);

  return out;
}

int num_classes_for_task(const std::string& task) {
  if (task == "binary") return 2;
  if (task == "part") return 4;
  if (task == "type") return 4;
  throw UsageError("unknown task: " + task);
}

}  // namespace tpseg::synth
