// Copyright 2026 The segvar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "segvar/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "fileio.hpp"

namespace segvar {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr int kMargin = 3;

struct Ellipse {
  double cx = 0, cy = 0, a = 1, b = 1, angle = 0;
};

struct PatientGeometry {
  double cx = 0, cy = 0;
  double radius = 0, wall = 0;
  double tumor_start = 0, tumor_extent = 0;  // radians
  bool bulge = false;
  double inward = 0, bulge_px = 0;
  bool distractor = false;
  double distractor_dx = 0, distractor_dy = 0;  // offset from the rectum center
  double distractor_a = 0, distractor_b = 0, distractor_angle = 0;
  Ellipse body;
  double gain = 1.0;
};

double reach(const SynthConfig& c) { return c.radius_max + c.bulge_max + 2.0 + c.slice_shift_max; }

// Angular membership of `theta` in [start, start + extent), modulo 2*pi.
bool in_sector(double theta, double start, double extent) {
  double d = std::fmod(theta - start, 2.0 * std::numbers::pi);
  if (d < 0) d += 2.0 * std::numbers::pi;
  return d < extent;
}

double ellipse_radius(const Ellipse& e, double x, double y) {
  const double dx = x - e.cx, dy = y - e.cy;
  const double c = std::cos(e.angle), s = std::sin(e.angle);
  const double u = (c * dx + s * dy) / e.a, v = (-s * dx + c * dy) / e.b;
  return std::sqrt(u * u + v * v);
}

PatientGeometry draw_patient(const SynthConfig& cfg, Rng& rng) {
  PatientGeometry g;
  const double n = cfg.image_size;
  g.radius = rng.uniform(cfg.radius_min, cfg.radius_max);
  g.wall = rng.uniform(cfg.wall_min, cfg.wall_max);
  const double r = reach(cfg) + kMargin;
  g.cx = rng.uniform(r, n - 1 - r);
  g.cy = rng.uniform(r, n - 1 - r);
  g.tumor_start = rng.uniform(0.0, 2.0 * std::numbers::pi);
  g.tumor_extent = rng.uniform(cfg.tumor_extent_min, cfg.tumor_extent_max) * kDeg;
  g.bulge = rng.bernoulli(cfg.bulge_probability);
  g.inward = rng.uniform(cfg.tumor_inward_min, cfg.tumor_inward_max);
  g.bulge_px = rng.uniform(std::min(1.0, cfg.bulge_max), cfg.bulge_max);
  g.gain = rng.uniform(1.0 - cfg.gain_jitter, 1.0 + cfg.gain_jitter);
  g.body = {n / 2.0 + rng.uniform(-2, 2), n / 2.0 + rng.uniform(-2, 2), n * rng.uniform(0.40, 0.47),
            n * rng.uniform(0.34, 0.42), rng.uniform(-0.2, 0.2)};

  const bool want = rng.bernoulli(cfg.distractor_probability);
  g.distractor_a = rng.uniform(0.5, 0.8) * g.radius;
  g.distractor_b = rng.uniform(0.4, 0.65) * g.radius;
  g.distractor_angle = rng.uniform(0.0, std::numbers::pi);
  // The distractor moves rigidly with the rectum under slice jitter, so a gap
  // measured from this patient's rectum stays valid. The margin absorbs the
  // rotation jitter near the image border.
  const double clear = g.radius + cfg.bulge_max + g.distractor_a + 2.0;
  const double span = g.distractor_a + cfg.slice_shift_max + 3.0 + kMargin;
  for (int attempt = 0; want && attempt < 256; ++attempt) {
    const double x = rng.uniform(span, n - 1 - span);
    const double y = rng.uniform(span, n - 1 - span);
    if (std::hypot(x - g.cx, y - g.cy) > clear) {
      g.distractor = true;
      g.distractor_dx = x - g.cx;
      g.distractor_dy = y - g.cy;
      break;
    }
  }
  return g;
}

SynthSample render_slice(const SynthConfig& cfg, const PatientGeometry& g, Rng& rng, bool jitter,
                         const std::string& patient) {
  const int n = cfg.image_size;
  double cx = g.cx, cy = g.cy, rot = 0.0;
  if (jitter) {
    rot = rng.uniform(-cfg.slice_rotation_max, cfg.slice_rotation_max) * kDeg;
    cx += rng.uniform(-cfg.slice_shift_max, cfg.slice_shift_max);
    cy += rng.uniform(-cfg.slice_shift_max, cfg.slice_shift_max);
  }
  const double tumor_start = g.tumor_start + rot;
  Ellipse distractor;
  if (g.distractor) {
    const double c = std::cos(rot), s = std::sin(rot);
    distractor = {cx + c * g.distractor_dx - s * g.distractor_dy, cy + s * g.distractor_dx + c * g.distractor_dy,
                  g.distractor_a, g.distractor_b, g.distractor_angle + rot};
  }

  SynthSample out;
  out.patient = patient;
  out.has_distractor = g.distractor;
  out.rectum = BinaryMask(n, n);
  BinaryMask candidate(n, n);
  std::vector<double> level(static_cast<std::size_t>(n) * n, cfg.background_level);
  const double inner = g.radius - g.wall;

  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * n + x;
      if (ellipse_radius(g.body, x, y) <= 1.0) level[i] = cfg.body_level;
      if (g.distractor) {
        const double er = ellipse_radius(distractor, x, y);
        if (er <= 1.0) level[i] = er >= 0.6 ? cfg.wall_level : cfg.lumen_level;
      }
      const double r = std::hypot(x - cx, y - cy);
      const double theta = std::atan2(y - cy, x - cx);
      if (r <= g.radius) {
        out.rectum[i] = 1;
        level[i] = r >= inner ? cfg.wall_level : cfg.lumen_level;
      }
      if (in_sector(theta, tumor_start, g.tumor_extent)) {
        const double lo = g.bulge ? inner : inner - g.inward;
        const double hi = g.bulge ? g.radius + g.bulge_px : g.radius;
        if (r >= std::max(lo, 0.0) && r <= hi) candidate[i] = 1;
      }
    }

  // Tumor stays within two pixels of the rectum by construction.
  const BinaryMask grown = dilate(out.rectum, 2);
  out.tumor = BinaryMask(n, n);
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    out.tumor[i] = candidate[i] & grown[i];
    if (out.tumor[i]) level[i] = cfg.tumor_level;
  }

  const double top = static_cast<double>((1 << cfg.depth) - 1);
  out.image = GrayImage(n, n, cfg.depth);
  for (std::size_t i = 0; i < level.size(); ++i) {
    const double v = level[i] * g.gain + (cfg.noise_std > 0 ? rng.normal(0.0, cfg.noise_std) : 0.0);
    out.image[i] = static_cast<std::uint16_t>(std::clamp(std::round(v), 0.0, top));
  }
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  require(image_size >= 32, ErrorCode::Config, "synth.image_size must be >= 32");
  require(n_patients >= 1 && slices_per_patient >= 1, ErrorCode::Config, "synth counts must be >= 1");
  require(depth == 8 || depth == 12 || depth == 16, ErrorCode::Config, "synth.depth must be 8, 12 or 16");
  require(radius_min > 0 && radius_min <= radius_max, ErrorCode::Config, "synth radius range invalid");
  require(wall_min > 0 && wall_min <= wall_max && wall_max < radius_min, ErrorCode::Config,
          "synth wall range must be positive and thinner than the rectum");
  require(tumor_extent_min > 0 && tumor_extent_min <= tumor_extent_max && tumor_extent_max <= 360,
          ErrorCode::Config, "synth tumor extent range invalid");
  require(tumor_inward_min >= 0 && tumor_inward_min <= tumor_inward_max, ErrorCode::Config,
          "synth tumor inward range invalid");
  require(bulge_max >= 0 && bulge_max <= 2.0, ErrorCode::Config, "synth.bulge_max must be in [0, 2]");
  require(bulge_probability >= 0 && bulge_probability <= 1 && distractor_probability >= 0 &&
              distractor_probability <= 1,
          ErrorCode::Config, "synth probabilities must be in [0,1]");
  require(noise_std >= 0 && gain_jitter >= 0 && gain_jitter < 1, ErrorCode::Config, "synth noise/gain invalid");
  require(2.0 * (reach(*this) + kMargin) < image_size - 1, ErrorCode::Config,
          "synth geometry cannot fit inside the image");
  const double top = static_cast<double>((1 << depth) - 1);
  require(tumor_level * (1 + gain_jitter) <= top && wall_level * (1 + gain_jitter) <= top, ErrorCode::Config,
          "synth intensity levels exceed the image depth");
}

BinaryMask dilate(const BinaryMask& m, int radius) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx >= 0 && yy >= 0 && xx < m.width() && yy < m.height()) out.at(xx, yy) = 1;
        }
    }
  return out;
}

int count_components(const BinaryMask& m) {
  std::vector<int> label(m.size(), 0);
  int next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const auto i = static_cast<std::size_t>(y) * m.width() + x;
      if (!m[i] || label[i]) continue;
      ++next;
      label[i] = next;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const auto [px, py] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = px + dx, yy = py + dy;
            if (xx < 0 || yy < 0 || xx >= m.width() || yy >= m.height()) continue;
            const auto j = static_cast<std::size_t>(yy) * m.width() + xx;
            if (m[j] && !label[j]) {
              label[j] = next;
              stack.push_back({xx, yy});
            }
          }
      }
    }
  return next;
}

SynthSample gen_sample(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto g = draw_patient(cfg, rng);
  return render_slice(cfg, g, rng, false, "p000");
}

std::vector<SynthSample> gen_samples(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<SynthSample> out;
  out.reserve(static_cast<std::size_t>(cfg.n_patients) * cfg.slices_per_patient);
  for (int p = 0; p < cfg.n_patients; ++p) {
    char patient[16];
    std::snprintf(patient, sizeof patient, "p%03d", p);
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(p)));
    const auto geometry = draw_patient(cfg, rng);
    for (int s = 0; s < cfg.slices_per_patient; ++s) {
      out.push_back(render_slice(cfg, geometry, rng, s > 0, patient));
      out.back().id = std::string(patient) + "_s" + std::to_string(s);
    }
  }
  return out;
}

Manifest gen_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  const auto samples = gen_samples(cfg);
  for (const char* sub : {"images", "masks_rectum", "masks_tumor"}) detail::ensure_dir(out_dir / sub);
  std::vector<SampleRecord> records;
  for (const auto& sample : samples) {
    const auto& id = sample.id;
    SampleRecord rec{id, sample.patient, "images/" + id + ".pgm", "masks_rectum/" + id + ".pgm",
                     "masks_tumor/" + id + ".pgm"};
    save_pnm(sample.image, out_dir / rec.image);
    save_pnm(sample.rectum, out_dir / rec.rectum_mask);
    save_pnm(sample.tumor, out_dir / rec.tumor_mask);
    records.push_back(std::move(rec));
  }
  Manifest m(std::move(records), out_dir);
  save_manifest(m, out_dir / "manifest.jsonl");
  return m;
}

}  // namespace segvar
