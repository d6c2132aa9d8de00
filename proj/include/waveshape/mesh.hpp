#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

namespace waveshape {

/// Indexed triangle mesh. Immutable by convention once built; all pipeline
/// stages treat meshes as values.
struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return triangles.empty(); }

  void bounding_box(Eigen::Vector3d& lo, Eigen::Vector3d& hi) const;
  double total_area() const;
};

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                     const Eigen::Vector3d& c);

/// Uniformly rescale and recenter so the tight bounding box is centered at the
/// origin and the longest axis spans exactly [-extent, +extent].
TriangleMesh normalize_mesh(const TriangleMesh& mesh, double extent);

/// Wavefront OBJ, v/f records only. Polygon faces are fan-triangulated;
/// degenerate (zero-area) triangles and out-of-range indices are dropped.
TriangleMesh load_obj(const std::string& path);
void save_obj(const std::string& path, const TriangleMesh& mesh);

}  // namespace waveshape
