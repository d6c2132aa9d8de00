#include "waveshape/sdf.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace waveshape {

namespace {

enum class Feature { kFace, kEdgeAB, kEdgeBC, kEdgeCA, kVertA, kVertB, kVertC };

// Closest point on triangle abc to p with Voronoi-region classification
// (Ericson, Real-Time Collision Detection 5.1.5).
Eigen::Vector3d closest_point_triangle(const Eigen::Vector3d& p,
                                       const Eigen::Vector3d& a,
                                       const Eigen::Vector3d& b,
                                       const Eigen::Vector3d& c, Feature& feat) {
  const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    feat = Feature::kVertA;
    return a;
  }
  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    feat = Feature::kVertB;
    return b;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    feat = Feature::kEdgeAB;
    return a + (d1 / (d1 - d3)) * ab;
  }
  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    feat = Feature::kVertC;
    return c;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    feat = Feature::kEdgeCA;
    return a + (d2 / (d2 - d6)) * ac;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    feat = Feature::kEdgeBC;
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  feat = Feature::kFace;
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double box_sq_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& lo,
                       const Eigen::Vector3d& hi) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double v = p[a] < lo[a] ? lo[a] - p[a] : (p[a] > hi[a] ? p[a] - hi[a] : 0.0);
    d2 += v * v;
  }
  return d2;
}

std::uint64_t edge_key(int u, int v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
         static_cast<std::uint32_t>(v);
}

}  // namespace

struct MeshSdf::Impl {
  struct Node {
    Eigen::Vector3d lo, hi;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // triangle index range for leaves
  };

  TriangleMesh mesh;
  std::vector<Eigen::Vector3d> face_normal;
  std::vector<Eigen::Vector3d> vertex_normal;
  std::unordered_map<std::uint64_t, Eigen::Vector3d> edge_normal;
  std::vector<int> order;  // BVH leaf triangle permutation
  std::vector<Node> nodes;
  bool watertight = true;

  explicit Impl(const TriangleMesh& in) : mesh(in) {
    build_normals();
    build_bvh();
  }

  void build_normals() {
    const auto& vs = mesh.vertices;
    face_normal.resize(mesh.triangles.size());
    vertex_normal.assign(vs.size(), Eigen::Vector3d::Zero());
    std::unordered_map<std::uint64_t, int> edge_count;
    edge_normal.reserve(mesh.triangles.size() * 2);

    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
      const auto& t = mesh.triangles[f];
      const Eigen::Vector3d &a = vs[t[0]], &b = vs[t[1]], &c = vs[t[2]];
      Eigen::Vector3d n = (b - a).cross(c - a);
      const double len = n.norm();
      n = len > 0 ? (n / len).eval() : Eigen::Vector3d::UnitZ();
      face_normal[f] = n;

      for (int e = 0; e < 3; ++e) {
        const int u = t[e], v = t[(e + 1) % 3];
        auto [it, inserted] =
            edge_normal.try_emplace(edge_key(u, v), Eigen::Vector3d::Zero());
        it->second += n;
        edge_count[edge_key(u, v)] += 1;
      }
      for (int corner = 0; corner < 3; ++corner) {
        const Eigen::Vector3d& o = vs[t[corner]];
        const Eigen::Vector3d u = (vs[t[(corner + 1) % 3]] - o).normalized();
        const Eigen::Vector3d w = (vs[t[(corner + 2) % 3]] - o).normalized();
        const double angle = std::acos(std::clamp(u.dot(w), -1.0, 1.0));
        vertex_normal[t[corner]] += angle * n;
      }
    }
    for (const auto& [key, count] : edge_count)
      if (count != 2) watertight = false;
  }

  void build_bvh() {
    order.resize(mesh.triangles.size());
    std::iota(order.begin(), order.end(), 0);
    nodes.reserve(2 * mesh.triangles.size());
    build_node(0, static_cast<int>(order.size()));
  }

  int build_node(int begin, int end) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (int i = begin; i < end; ++i) {
      for (int corner : mesh.triangles[order[i]]) {
        lo = lo.cwiseMin(mesh.vertices[corner]);
        hi = hi.cwiseMax(mesh.vertices[corner]);
      }
    }
    nodes[id].lo = lo;
    nodes[id].hi = hi;
    if (end - begin <= 8) {
      nodes[id].begin = begin;
      nodes[id].end = end;
      return id;
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                     [&](int ta, int tb) {
                       return centroid(ta)[axis] < centroid(tb)[axis];
                     });
    const int l = build_node(begin, mid);
    const int r = build_node(mid, end);
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }

  Eigen::Vector3d centroid(int tri) const {
    const auto& t = mesh.triangles[tri];
    return (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
  }

  struct Hit {
    double sq_dist = std::numeric_limits<double>::infinity();
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    int triangle = -1;
    Feature feature = Feature::kFace;
  };

  void query(int node_id, const Eigen::Vector3d& p, Hit& best) const {
    const Node& node = nodes[node_id];
    if (box_sq_distance(p, node.lo, node.hi) >= best.sq_dist) return;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int tri = order[i];
        const auto& t = mesh.triangles[tri];
        Feature feat;
        const Eigen::Vector3d q = closest_point_triangle(
            p, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], feat);
        const double d2 = (p - q).squaredNorm();
        if (d2 < best.sq_dist) {
          best = {d2, q, tri, feat};
        }
      }
      return;
    }
    const double dl = box_sq_distance(p, nodes[node.left].lo, nodes[node.left].hi);
    const double dr = box_sq_distance(p, nodes[node.right].lo, nodes[node.right].hi);
    if (dl <= dr) {
      query(node.left, p, best);
      query(node.right, p, best);
    } else {
      query(node.right, p, best);
      query(node.left, p, best);
    }
  }

  Eigen::Vector3d pseudonormal(const Hit& hit) const {
    const auto& t = mesh.triangles[hit.triangle];
    switch (hit.feature) {
      case Feature::kFace:   return face_normal[hit.triangle];
      case Feature::kEdgeAB: return edge_normal.at(edge_key(t[0], t[1]));
      case Feature::kEdgeBC: return edge_normal.at(edge_key(t[1], t[2]));
      case Feature::kEdgeCA: return edge_normal.at(edge_key(t[2], t[0]));
      case Feature::kVertA:  return vertex_normal[t[0]];
      case Feature::kVertB:  return vertex_normal[t[1]];
      case Feature::kVertC:  return vertex_normal[t[2]];
    }
    return face_normal[hit.triangle];
  }
};

MeshSdf::MeshSdf(const TriangleMesh& mesh) : impl_(std::make_unique<Impl>(mesh)) {
  if (mesh.triangles.empty()) throw DataError("MeshSdf: empty mesh");
  if (!impl_->watertight)
    std::fprintf(stderr,
                 "warning: mesh is not watertight; signed distances may be "
                 "locally wrong\n");
}

MeshSdf::~MeshSdf() = default;
MeshSdf::MeshSdf(MeshSdf&&) noexcept = default;
MeshSdf& MeshSdf::operator=(MeshSdf&&) noexcept = default;

double MeshSdf::distance(const Eigen::Vector3d& p) const {
  Impl::Hit best;
  impl_->query(0, p, best);
  return std::sqrt(best.sq_dist);
}

double MeshSdf::signed_distance(const Eigen::Vector3d& p) const {
  Impl::Hit best;
  impl_->query(0, p, best);
  const double d = std::sqrt(best.sq_dist);
  const Eigen::Vector3d n = impl_->pseudonormal(best);
  return n.dot(p - best.point) >= 0.0 ? d : -d;
}

int MeshSdf::sign_by_ray_parity(const Eigen::Vector3d& p) const {
  // A crossing that grazes a triangle edge or starts on the surface makes the
  // parity unreliable, so such rays are discarded and another fixed direction
  // tried. Directions have irrational components to dodge axis-aligned
  // geometry in the common case.
  const Eigen::Vector3d dirs[6] = {
      Eigen::Vector3d(0.5773502691896258, 0.6881909602355868, 0.4392038421964477),
      Eigen::Vector3d(-0.3372105458243579, 0.8295372629891414, 0.4454102117379310),
      Eigen::Vector3d(0.7071067811865476, -0.4472135954999579, 0.5477225575051661),
      Eigen::Vector3d(-0.2672612419124244, -0.5345224838248488, 0.8017837257372732),
      Eigen::Vector3d(0.4850712500726659, 0.7276068751089989, -0.4850712500726659),
      Eigen::Vector3d(-0.6396021490668313, 0.4264014327112209, -0.6396021490668313)};

  for (const Eigen::Vector3d& d0 : dirs) {
    const Eigen::Vector3d dir = d0.normalized();
    int crossings = 0;
    bool suspicious = false;
    for (const auto& t : impl_->mesh.triangles) {
      const Eigen::Vector3d &a = impl_->mesh.vertices[t[0]],
                            &b = impl_->mesh.vertices[t[1]],
                            &c = impl_->mesh.vertices[t[2]];
      // Moller-Trumbore
      const Eigen::Vector3d e1 = b - a, e2 = c - a;
      const Eigen::Vector3d h = dir.cross(e2);
      const double det = e1.dot(h);
      if (std::abs(det) < 1e-14) continue;
      const double inv = 1.0 / det;
      const Eigen::Vector3d s = p - a;
      const double u = inv * s.dot(h);
      if (u < -1e-10 || u > 1.0 + 1e-10) continue;
      const Eigen::Vector3d q = s.cross(e1);
      const double v = inv * dir.dot(q);
      if (v < -1e-10 || u + v > 1.0 + 1e-10) continue;
      const double tt = inv * e2.dot(q);
      if (tt <= 0.0) continue;
      const double eps = 1e-9;
      if (u < eps || v < eps || u + v > 1.0 - eps || tt < eps) {
        suspicious = true;
        break;
      }
      ++crossings;
    }
    if (!suspicious) return (crossings % 2 == 0) ? +1 : -1;
  }
  // every direction grazed something; defer to the pseudonormal sign
  return signed_distance(p) >= 0.0 ? +1 : -1;
}

bool MeshSdf::watertight_input() const { return impl_->watertight; }

void TsdfConfig::validate() const {
  if (resolution < 8 || (resolution & (resolution - 1)) != 0)
    throw ConfigError("tsdf resolution must be a power of two >= 8");
  if (!(truncation > 0.0) || truncation > extent)
    throw ConfigError("tsdf truncation must satisfy 0 < tau <= extent");
}

VolumeGrid sample_tsdf(const MeshSdf& sdf, const TsdfConfig& cfg) {
  cfg.validate();
  VolumeGrid grid(cfg.resolution, cfg.extent, cfg.truncation);
  const int n = cfg.resolution;
  const double tau = cfg.truncation;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const double d = sdf.signed_distance(grid.position(i, j, k));
        grid.at(i, j, k) = std::clamp(d, -tau, tau);
      }
    }
  }
  return grid;
}

VolumeGrid sample_tsdf(const TriangleMesh& mesh, const TsdfConfig& cfg) {
  return sample_tsdf(MeshSdf(mesh), cfg);
}

}  // namespace waveshape
