#include "waveshape/isosurface.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace waveshape {

namespace {

// Corner offsets matching the table convention in mc_tables.cpp.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1},
                               {0, 1, 0}, {1, 1, 0}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorner[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0},
                                    {4, 5}, {5, 6}, {6, 7}, {7, 4},
                                    {0, 4}, {1, 5}, {2, 6}, {3, 7}};

// Canonical global edge id: (origin voxel, axis). Two cells sharing an edge
// always agree on it, which is what makes exact-key welding work.
std::uint64_t global_edge_key(int n, int ci, int cj, int ck, int edge) {
  const int* a = kCorner[kEdgeCorner[edge][0]];
  const int* b = kCorner[kEdgeCorner[edge][1]];
  const int oi = ci + std::min(a[0], b[0]);
  const int oj = cj + std::min(a[1], b[1]);
  const int ok = ck + std::min(a[2], b[2]);
  const int axis = a[0] != b[0] ? 0 : (a[1] != b[1] ? 1 : 2);
  return (static_cast<std::uint64_t>((static_cast<std::uint64_t>(oi) * n + oj) * n +
                                     ok)) *
             3 +
         axis;
}

}  // namespace

TriangleMesh marching_cubes(const VolumeGrid& volume, double iso) {
  TriangleMesh mesh;
  const int n = volume.res;
  if (n < 2) return mesh;

  // Samples exactly at the iso level get nudged off it so no cell corner is
  // ever ambiguous.
  const double scale = volume.truncation > 0.0
                           ? volume.truncation
                           : std::max(1.0, volume.values.abs().maxCoeff());
  const double nudge = 1e-9 * scale;
  auto fetch = [&](int i, int j, int k) {
    const double v = volume.at(i, j, k);
    return v == iso ? iso + nudge : v;
  };

  // Pass 1 (parallel): find active cells per i-slab.
  const int cells = n - 1;
  std::vector<std::vector<std::int64_t>> active(cells);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      for (int k = 0; k < cells; ++k) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          if (fetch(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]) < iso)
            cube |= 1 << c;
        }
        if (kMcEdgeTable[cube] != 0)
          active[i].push_back((static_cast<std::int64_t>(j) * cells + k) * 256 + cube);
      }
    }
  }

  // Pass 2 (sequential, deterministic): weld vertices and emit triangles.
  std::unordered_map<std::uint64_t, int> edge_vertex;
  int vert_ids[12];
  for (int i = 0; i < cells; ++i) {
    for (const std::int64_t packed : active[i]) {
      const int cube = static_cast<int>(packed & 255);
      const std::int64_t cell = packed >> 8;
      const int j = static_cast<int>(cell / cells);
      const int k = static_cast<int>(cell % cells);

      const std::uint16_t flags = kMcEdgeTable[cube];
      for (int e = 0; e < 12; ++e) {
        if (!(flags & (1u << e))) continue;
        const std::uint64_t key = global_edge_key(n, i, j, k, e);
        auto [it, inserted] = edge_vertex.try_emplace(key, -1);
        if (inserted) {
          const int* ca = kCorner[kEdgeCorner[e][0]];
          const int* cb = kCorner[kEdgeCorner[e][1]];
          const double va = fetch(i + ca[0], j + ca[1], k + ca[2]);
          const double vb = fetch(i + cb[0], j + cb[1], k + cb[2]);
          const Eigen::Vector3d pa = volume.position(i + ca[0], j + ca[1], k + ca[2]);
          const Eigen::Vector3d pb = volume.position(i + cb[0], j + cb[1], k + cb[2]);
          const double t = (iso - va) / (vb - va);
          it->second = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(pa + t * (pb - pa));
        }
        vert_ids[e] = it->second;
      }

      for (const std::int8_t* tri = kMcTriTable[cube]; *tri != -1; tri += 3) {
        // Table winding encloses the below-iso region; flip so normals point
        // toward increasing field values.
        mesh.triangles.push_back(
            {vert_ids[tri[0]], vert_ids[tri[2]], vert_ids[tri[1]]});
      }
    }
  }
  return mesh;
}

bool mesh_is_watertight(const TriangleMesh& mesh) {
  // every undirected edge must appear as exactly one (a,b) and one (b,a)
  std::unordered_map<std::uint64_t, int> directed;
  directed.reserve(mesh.triangles.size() * 3);
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  };
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      if (a == b) return false;
      if (++directed[key(a, b)] > 1) return false;  // duplicated directed edge
    }
  }
  for (const auto& [k, count] : directed) {
    const int a = static_cast<int>(k >> 32);
    const int b = static_cast<int>(k & 0xffffffffu);
    auto it = directed.find(key(b, a));
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

}  // namespace waveshape
