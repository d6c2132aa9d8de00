#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "waveshape/grid.hpp"
#include "waveshape/mesh.hpp"

namespace waveshape {

/// TSDF sampling parameters. resolution must be a power of two (the dyadic
/// wavelet decomposition downstream requires it). Desk-scale default is 64;
/// production-scale runs use 256.
struct TsdfConfig {
  int resolution = 64;
  double extent = 0.45;
  double truncation = 0.1;

  void validate() const;
};

/// Exact point-to-mesh distance queries with sign from angle-weighted
/// pseudonormals at the closest feature (face, edge or vertex). Queries are
/// accelerated by an axis-aligned BVH over the triangles and are exact.
///
/// Non-watertight input is accepted; watertight_input() reports whether every
/// edge is shared by exactly two triangles. When it is false the pseudonormal
/// sign can be locally wrong near the open or non-manifold parts.
class MeshSdf {
 public:
  explicit MeshSdf(const TriangleMesh& mesh);
  ~MeshSdf();
  MeshSdf(MeshSdf&&) noexcept;
  MeshSdf& operator=(MeshSdf&&) noexcept;

  /// Signed Euclidean distance: negative inside, positive outside.
  double signed_distance(const Eigen::Vector3d& p) const;

  /// Unsigned distance to the closest point on any triangle.
  double distance(const Eigen::Vector3d& p) const;

  /// Ray-crossing parity sign (+1 outside, -1 inside). Validation fallback
  /// for the pseudonormal sign; odd crossing count means inside.
  int sign_by_ray_parity(const Eigen::Vector3d& p) const;

  bool watertight_input() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Sample a truncated signed distance volume on the cell-centered grid
/// defined by cfg. Values are clamp(signed_distance, -tau, +tau). The mesh is
/// expected to be normalized to the cfg extent.
VolumeGrid sample_tsdf(const TriangleMesh& mesh, const TsdfConfig& cfg);
VolumeGrid sample_tsdf(const MeshSdf& sdf, const TsdfConfig& cfg);

}  // namespace waveshape
