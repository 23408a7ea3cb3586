#include "jetleg/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace jetleg::terrain {

void HeightField::validate() const {
  if (spacing <= 0.0) throw InvalidSpec("HeightField spacing must be > 0");
  if (samples.size() < 2) throw InvalidSpec("HeightField needs >= 2 samples");
  for (double s : samples)
    if (!std::isfinite(s)) throw InvalidSpec("HeightField sample not finite");
}

double HeightField::height_at(double x) const {
  const double t = (x - origin) / spacing;
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  if (t <= 0.0) return policy == OutOfRange::Clamp ? samples.front() : -pit_depth;
  if (t >= static_cast<double>(n - 1))
    return policy == OutOfRange::Clamp ? samples.back() : -pit_depth;
  const auto i = static_cast<std::ptrdiff_t>(t);
  const double f = t - static_cast<double>(i);
  return samples[i] * (1.0 - f) + samples[i + 1] * f;
}

TerrainKind kind_from_string(const std::string& s) {
  if (s == "flat") return TerrainKind::Flat;
  if (s == "rough") return TerrainKind::Rough;
  if (s == "gaps") return TerrainKind::Gaps;
  if (s == "stepping_stones") return TerrainKind::SteppingStones;
  throw InvalidSpec("unknown terrain kind: " + s);
}

std::string kind_to_string(TerrainKind k) {
  switch (k) {
    case TerrainKind::Flat: return "flat";
    case TerrainKind::Rough: return "rough";
    case TerrainKind::Gaps: return "gaps";
    case TerrainKind::SteppingStones: return "stepping_stones";
  }
  return "flat";
}

HeightField generate(const TerrainSpec& spec) {
  if (spec.length <= 0.0 || spec.spacing <= 0.0)
    throw InvalidSpec("terrain length and spacing must be > 0");
  const auto n = static_cast<size_t>(std::floor(spec.length / spec.spacing)) + 1;
  if (n < 2) throw InvalidSpec("terrain too short for its spacing");

  HeightField field;
  field.origin = spec.origin;
  field.spacing = spec.spacing;
  field.samples.assign(n, 0.0);
  field.pit_depth = spec.pit_depth;

  auto x_of = [&](size_t i) { return spec.origin + spec.spacing * static_cast<double>(i); };

  switch (spec.kind) {
    case TerrainKind::Flat:
      break;
    case TerrainKind::Gaps: {
      if (spec.gap_width <= 0.0 || spec.gap_pitch <= 0.0 || spec.pit_depth <= 0.0)
        throw InvalidSpec("gaps: width, pitch, depth must be > 0");
      if (spec.gap_width >= spec.gap_pitch)
        throw InvalidSpec("gaps: width must be smaller than pitch");
      for (size_t i = 0; i < n; ++i) {
        const double u = x_of(i) - spec.gap_start;
        if (u >= 0.0 && std::fmod(u, spec.gap_pitch) < spec.gap_width)
          field.samples[i] = -spec.pit_depth;
      }
      break;
    }
    case TerrainKind::SteppingStones: {
      if (spec.stone_width <= 0.0 || spec.stone_pitch <= 0.0 || spec.pit_depth <= 0.0)
        throw InvalidSpec("stepping_stones: width, pitch, depth must be > 0");
      if (spec.stone_width >= spec.stone_pitch)
        throw InvalidSpec("stepping_stones: stone width must be smaller than pitch");
      for (size_t i = 0; i < n; ++i) {
        const double u = x_of(i) - spec.origin;
        if (std::fmod(u, spec.stone_pitch) >= spec.stone_width)
          field.samples[i] = -spec.pit_depth;
      }
      break;
    }
    case TerrainKind::Rough: {
      if (spec.amplitude <= 0.0 || spec.correlation <= 0.0)
        throw InvalidSpec("rough: amplitude and correlation must be > 0");
      std::mt19937_64 rng(spec.seed);
      std::normal_distribution<double> noise(0.0, 1.0);
      std::vector<double> white(n);
      for (auto& v : white) v = noise(rng);
      // Gaussian smoothing over the correlation length, then rescale so the
      // sample standard deviation equals the requested amplitude.
      const double sigma = spec.correlation / spec.spacing;
      const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
      std::vector<double> kernel(2 * half + 1);
      double ksum = 0.0;
      for (int k = -half; k <= half; ++k) {
        kernel[k + half] = std::exp(-0.5 * (k / sigma) * (k / sigma));
        ksum += kernel[k + half];
      }
      for (auto& k : kernel) k /= ksum;
      for (size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = -half; k <= half; ++k) {
          auto j = static_cast<std::ptrdiff_t>(i) + k;
          j = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(n) - 1);
          acc += kernel[k + half] * white[static_cast<size_t>(j)];
        }
        field.samples[i] = acc;
      }
      double mean = 0.0;
      for (double v : field.samples) mean += v;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double v : field.samples) var += (v - mean) * (v - mean);
      var /= static_cast<double>(n);
      const double scale = var > 0.0 ? spec.amplitude / std::sqrt(var) : 0.0;
      for (auto& v : field.samples) v = (v - mean) * scale;
      break;
    }
  }
  field.validate();
  return field;
}

Eigen::VectorXd sample_heightmap(const HeightField& field, double base_x,
                                 double base_z, int cells, double cell_size) {
  if (cells < 1) throw InvalidSpec("heightmap needs >= 1 cell");
  if (cell_size <= 0.0) throw InvalidSpec("heightmap cell size must be > 0");
  Eigen::VectorXd row(cells);
  const double mid = 0.5 * static_cast<double>(cells - 1);
  for (int k = 0; k < cells; ++k) {
    const double x = base_x + (static_cast<double>(k) - mid) * cell_size;
    row(k) = field.height_at(x) - base_z;
  }
  return row;
}

void write_xy(const HeightField& field, std::ostream& out) {
  for (size_t i = 0; i < field.samples.size(); ++i)
    out << field.origin + field.spacing * static_cast<double>(i) << ' '
        << field.samples[i] << '\n';
}

}  // namespace jetleg::terrain
