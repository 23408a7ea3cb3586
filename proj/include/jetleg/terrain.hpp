#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "jetleg/errors.hpp"

namespace jetleg::terrain {

enum class OutOfRange { Clamp, PitDepth };

/// 1-D elevation profile, immutable after generation.
struct HeightField {
  double origin = 0.0;   // x of samples[0], m
  double spacing = 0.1;  // m
  std::vector<double> samples;
  OutOfRange policy = OutOfRange::Clamp;
  double pit_depth = 3.0;  // value returned out of range under PitDepth

  void validate() const;
  double x_max() const { return origin + spacing * (samples.size() - 1); }
  /// Linear interpolation between neighbouring samples.
  double height_at(double x) const;
};

enum class TerrainKind { Flat, Rough, Gaps, SteppingStones };

struct TerrainSpec {
  TerrainKind kind = TerrainKind::Flat;
  double origin = -10.0;
  double length = 80.0;
  double spacing = 0.05;
  // gaps
  double gap_width = 2.0;
  double gap_pitch = 8.0;   // distance between gap starts
  double gap_start = 4.0;   // x of the first gap
  double pit_depth = 3.0;
  // stepping stones
  double stone_width = 0.8;
  double stone_pitch = 1.6;
  // rough
  double amplitude = 0.1;
  double correlation = 0.5;  // smoothing length, m
  uint64_t seed = 0;
};

TerrainKind kind_from_string(const std::string& s);
std::string kind_to_string(TerrainKind k);

/// Deterministic in (spec, seed). Throws InvalidSpec on bad parameters.
HeightField generate(const TerrainSpec& spec);

/// Robot-centric elevation row: cell k sits at
/// base_x + (k - (cells-1)/2) * cell_size and reads terrain - base_z.
Eigen::VectorXd sample_heightmap(const HeightField& field, double base_x,
                                 double base_z, int cells, double cell_size);

/// Two-column text (x, elevation), one row per sample.
void write_xy(const HeightField& field, std::ostream& out);

}  // namespace jetleg::terrain
