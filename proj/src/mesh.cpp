#include "waveshape/mesh.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "waveshape/errors.hpp"

namespace waveshape {

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                     const Eigen::Vector3d& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

void TriangleMesh::bounding_box(Eigen::Vector3d& lo, Eigen::Vector3d& hi) const {
  lo.setConstant(std::numeric_limits<double>::infinity());
  hi.setConstant(-std::numeric_limits<double>::infinity());
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

double TriangleMesh::total_area() const {
  double area = 0.0;
  for (const auto& t : triangles)
    area += triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
  return area;
}

TriangleMesh normalize_mesh(const TriangleMesh& mesh, double extent) {
  if (mesh.vertices.empty() || mesh.triangles.empty())
    throw DataError("normalize_mesh: empty mesh");
  Eigen::Vector3d lo, hi;
  mesh.bounding_box(lo, hi);
  const Eigen::Vector3d center = 0.5 * (lo + hi);
  const double longest = (hi - lo).maxCoeff();
  if (!(longest > 0.0)) throw DataError("normalize_mesh: degenerate bounding box");
  const double scale = 2.0 * extent / longest;

  TriangleMesh out;
  out.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) out.vertices.push_back((v - center) * scale);
  out.triangles = mesh.triangles;
  return out;
}

TriangleMesh load_obj(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path);

  TriangleMesh mesh;
  std::string line;
  std::vector<int> face;
  while (std::getline(is, line)) {
    if (line.size() < 2) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Eigen::Vector3d v;
      ls >> v.x() >> v.y() >> v.z();
      if (!ls) throw DataError("malformed vertex record in " + path);
      if (!v.allFinite()) throw DataError("non-finite vertex in " + path);
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      face.clear();
      std::string item;
      while (ls >> item) {
        // accept "i", "i/t", "i/t/n", "i//n"
        const std::size_t slash = item.find('/');
        const std::string head = slash == std::string::npos ? item : item.substr(0, slash);
        int idx = 0;
        try {
          idx = std::stoi(head);
        } catch (const std::exception&) {
          throw DataError("malformed face record in " + path);
        }
        if (idx < 0) idx = static_cast<int>(mesh.vertices.size()) + idx + 1;
        face.push_back(idx - 1);
      }
      if (face.size() < 3) throw DataError("face with fewer than 3 vertices in " + path);
      for (int idx : face)
        if (idx < 0 || idx >= static_cast<int>(mesh.vertices.size()))
          throw DataError("face index out of range in " + path);
      for (std::size_t i = 1; i + 1 < face.size(); ++i)
        mesh.triangles.push_back({face[0], face[i], face[i + 1]});
    }
  }

  // drop zero-area triangles
  auto degenerate = [&](const std::array<int, 3>& t) {
    return triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                         mesh.vertices[t[2]]) <= 0.0;
  };
  mesh.triangles.erase(
      std::remove_if(mesh.triangles.begin(), mesh.triangles.end(), degenerate),
      mesh.triangles.end());

  if (mesh.triangles.empty()) throw DataError("no usable triangles in " + path);
  return mesh;
}

void save_obj(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for write: " + path);
  os.precision(9);
  for (const auto& v : mesh.vertices)
    os << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& t : mesh.triangles)
    os << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
  if (!os) throw DataError("write failed: " + path);
}

}  // namespace waveshape
