#pragma once

// Shared test fixtures: procedural meshes, analytic fields and brute-force
// oracles kept independent of the library's transform implementations.

#include <Eigen/Geometry>
#include <cmath>
#include <map>
#include <vector>

#include "waveshape/grid.hpp"
#include "waveshape/mesh.hpp"
#include "waveshape/rng.hpp"

namespace testsupport {

using waveshape::TriangleMesh;
using waveshape::VolumeGrid;

inline TriangleMesh make_box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  TriangleMesh m;
  for (int c = 0; c < 8; ++c)
    m.vertices.push_back({c & 1 ? hi.x() : lo.x(), c & 2 ? hi.y() : lo.y(),
                          c & 4 ? hi.z() : lo.z()});
  // 12 triangles, outward orientation
  const int quads[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
                           {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return m;
}

/// Icosphere: subdivided icosahedron scaled to the given radius. Watertight
/// and convex.
inline TriangleMesh make_icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& v : verts) v.normalize();

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Eigen::Vector3d m = (verts[a] + verts[b]).normalized();
      verts.push_back(m);
      const int id = static_cast<int>(verts.size()) - 1;
      midpoint[key] = id;
      return id;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  TriangleMesh m;
  for (const auto& v : verts) m.vertices.push_back(v * radius);
  m.triangles = faces;
  return m;
}

/// Chair-shaped triangle soup: seat slab, backrest and four legs as
/// overlapping boxes; parameters vary proportions across test instances.
inline TriangleMesh make_chair(double leg_thickness = 0.1, double back_height = 0.9,
                               double seat_height = 0.5, double width = 1.0) {
  TriangleMesh chair;
  auto add = [&](const TriangleMesh& part) {
    const int base = static_cast<int>(chair.vertices.size());
    chair.vertices.insert(chair.vertices.end(), part.vertices.begin(),
                          part.vertices.end());
    for (auto tri : part.triangles)
      chair.triangles.push_back({tri[0] + base, tri[1] + base, tri[2] + base});
  };
  const double w = width, lt = leg_thickness;
  const double seat_top = seat_height, seat_bot = seat_height - 0.08;
  // seat
  add(make_box({0, seat_bot, 0}, {w, seat_top, w}));
  // backrest
  add(make_box({0, seat_top - 0.02, 0}, {w, seat_top + back_height, 0.08}));
  // legs (overlap slightly into the seat slab)
  const double lo_in = seat_bot + 0.02;
  add(make_box({0, 0, 0}, {lt, lo_in, lt}));
  add(make_box({w - lt, 0, 0}, {w, lo_in, lt}));
  add(make_box({0, 0, w - lt}, {lt, lo_in, w}));
  add(make_box({w - lt, 0, w - lt}, {w, lo_in, w}));
  return chair;
}

/// Exact TSDF of a centered sphere sampled on the library grid convention.
inline VolumeGrid analytic_sphere_tsdf(int res, double extent, double radius,
                                       double tau) {
  VolumeGrid g(res, extent, tau);
  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j)
      for (int k = 0; k < res; ++k) {
        const double d = g.position(i, j, k).norm() - radius;
        g.at(i, j, k) = std::clamp(d, -tau, tau);
      }
  return g;
}

inline VolumeGrid random_volume(int res, waveshape::Rng& rng, double extent = 0.45) {
  VolumeGrid g(res, extent, 0.0);
  for (Eigen::Index i = 0; i < g.values.size(); ++i) g.values[i] = rng.next_normal();
  return g;
}

/// Separable Gaussian blur (truncated at 3 sigma), brute force.
inline VolumeGrid gaussian_smooth(const VolumeGrid& in, double sigma) {
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> kernel(2 * r + 1);
  double sum = 0;
  for (int i = -r; i <= r; ++i) {
    kernel[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + r];
  }
  for (auto& k : kernel) k /= sum;

  VolumeGrid out = in;
  const int n = in.res;
  auto clampi = [&](int v) { return std::clamp(v, 0, n - 1); };
  for (int axis = 0; axis < 3; ++axis) {
    VolumeGrid tmp = out;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double acc = 0;
          for (int o = -r; o <= r; ++o) {
            const int ii = axis == 0 ? clampi(i + o) : i;
            const int jj = axis == 1 ? clampi(j + o) : j;
            const int kk = axis == 2 ? clampi(k + o) : k;
            acc += kernel[o + r] * tmp.at(ii, jj, kk);
          }
          out.at(i, j, k) = acc;
        }
  }
  return out;
}

/// Brute-force 3D lowpass-and-decimate oracle: direct triple convolution of
/// the whole-sample symmetric extension, independent of the separable passes.
inline VolumeGrid dwt3_coarse_oracle(const VolumeGrid& v,
                                     const Eigen::ArrayXd& lowpass, int origin) {
  const int n = v.res;
  const int half = n / 2;
  auto reflect = [&](int i) {
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return i;
  };
  VolumeGrid out(half, v.extent, 0.0);
  const int len = static_cast<int>(lowpass.size());
  for (int i = 0; i < half; ++i)
    for (int j = 0; j < half; ++j)
      for (int k = 0; k < half; ++k) {
        double acc = 0;
        for (int a = 0; a < len; ++a)
          for (int b = 0; b < len; ++b)
            for (int c = 0; c < len; ++c)
              acc += lowpass[a] * lowpass[b] * lowpass[c] *
                     v.at(reflect(2 * i + a - origin), reflect(2 * j + b - origin),
                          reflect(2 * k + c - origin));
        out.at(i, j, k) = acc;
      }
  return out;
}

inline double max_abs_diff(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  return (a - b).abs().maxCoeff();
}

inline double rel_linf(const Eigen::ArrayXd& a, const Eigen::ArrayXd& ref) {
  const double scale = std::max(1e-300, ref.abs().maxCoeff());
  return (a - ref).abs().maxCoeff() / scale;
}

}  // namespace testsupport
