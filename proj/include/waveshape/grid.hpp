#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "waveshape/errors.hpp"

namespace waveshape {

/// Dense cubic scalar field over the axis-aligned cube [-extent, +extent]^3.
/// Samples are cell-centered: index (i, j, k) maps to
///   position(i, j, k) = -extent + (index + 0.5) * (2 * extent / res)  per axis,
/// and values are stored z-fastest: linear index (i * res + j) * res + k.
/// truncation is the TSDF clamp bound tau, or 0 for non-TSDF fields.
template <typename Scalar>
struct Grid3 {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  int res = 0;
  double extent = 0.0;
  double truncation = 0.0;
  Array values;

  Grid3() = default;
  Grid3(int res_, double extent_, double truncation_ = 0.0)
      : res(res_), extent(extent_), truncation(truncation_) {
    values = Array::Zero(static_cast<Eigen::Index>(res) * res * res);
  }

  std::int64_t size() const { return static_cast<std::int64_t>(res) * res * res; }

  double voxel_size() const { return 2.0 * extent / res; }

  Scalar& at(int i, int j, int k) {
    return values[(static_cast<std::int64_t>(i) * res + j) * res + k];
  }
  Scalar at(int i, int j, int k) const {
    return values[(static_cast<std::int64_t>(i) * res + j) * res + k];
  }

  Eigen::Vector3d position(int i, int j, int k) const {
    const double step = voxel_size();
    return {-extent + (i + 0.5) * step, -extent + (j + 0.5) * step,
            -extent + (k + 0.5) * step};
  }

  /// Nearest in-range grid index of a spatial point (inverse of position()).
  Eigen::Vector3i nearest_index(const Eigen::Vector3d& p) const {
    const double step = voxel_size();
    Eigen::Vector3i idx;
    for (int a = 0; a < 3; ++a) {
      int i = static_cast<int>(std::floor((p[a] + extent) / step));
      idx[a] = std::min(std::max(i, 0), res - 1);
    }
    return idx;
  }

  /// Trilinear interpolation at an arbitrary point; clamps to the border
  /// sample outside the cell-center lattice.
  double sample_trilinear(const Eigen::Vector3d& p) const {
    const double step = voxel_size();
    double f[3];
    int i0[3];
    for (int a = 0; a < 3; ++a) {
      const double u = (p[a] + extent) / step - 0.5;
      double fl = std::floor(u);
      i0[a] = static_cast<int>(fl);
      f[a] = u - fl;
      if (i0[a] < 0) { i0[a] = 0; f[a] = 0.0; }
      if (i0[a] >= res - 1) { i0[a] = res - 2; f[a] = 1.0; }
    }
    double acc = 0.0;
    for (int di = 0; di < 2; ++di)
      for (int dj = 0; dj < 2; ++dj)
        for (int dk = 0; dk < 2; ++dk) {
          const double w = (di ? f[0] : 1 - f[0]) * (dj ? f[1] : 1 - f[1]) *
                           (dk ? f[2] : 1 - f[2]);
          acc += w * static_cast<double>(at(i0[0] + di, i0[1] + dj, i0[2] + dk));
        }
    return acc;
  }

  bool all_finite() const { return values.isFinite().all(); }
};

using VolumeGrid = Grid3<double>;

/// ".vol" file: 16-byte header (magic "WVOL", u32 LE resolution, f32 LE extent,
/// f32 LE truncation) followed by res^3 f32 LE values, z-fastest.
void write_vol(const std::string& path, const VolumeGrid& grid);
VolumeGrid read_vol(const std::string& path);

// Stream variants, used when a .vol payload is embedded in another file.
void write_vol_stream(std::ostream& os, const VolumeGrid& grid);
VolumeGrid read_vol_stream(std::istream& is);

}  // namespace waveshape
