#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "support.hpp"
#include "waveshape/sdf.hpp"

using namespace waveshape;
using namespace testsupport;

TEST_CASE("normalize_mesh: unit cube to [-0.45, 0.45]^3") {
  const TriangleMesh cube = make_box({0, 0, 0}, {1, 1, 1});
  const TriangleMesh n = normalize_mesh(cube, 0.45);
  Eigen::Vector3d lo, hi;
  n.bounding_box(lo, hi);
  CHECK(lo.isApprox(Eigen::Vector3d(-0.45, -0.45, -0.45), 1e-12));
  CHECK(hi.isApprox(Eigen::Vector3d(0.45, 0.45, 0.45), 1e-12));
}

TEST_CASE("normalize_mesh is idempotent") {
  const TriangleMesh once = normalize_mesh(make_icosphere(1.0, 1), 0.45);
  const TriangleMesh twice = normalize_mesh(once, 0.45);
  for (std::size_t i = 0; i < once.vertices.size(); ++i)
    CHECK((once.vertices[i] - twice.vertices[i]).norm() < 1e-14);
}

TEST_CASE("normalize_mesh: 2x1x1 box scales to 0.9 x 0.45 x 0.45") {
  // hand derivation: longest axis 2 spans 0.9, so scale = 0.45; the other
  // axes become 0.45 wide, i.e. [-0.225, 0.225]
  const TriangleMesh box = make_box({0, 0, 0}, {2, 1, 1});
  const TriangleMesh n = normalize_mesh(box, 0.45);
  Eigen::Vector3d lo, hi;
  n.bounding_box(lo, hi);
  CHECK(lo.isApprox(Eigen::Vector3d(-0.45, -0.225, -0.225), 1e-12));
  CHECK(hi.isApprox(Eigen::Vector3d(0.45, 0.225, 0.225), 1e-12));
  // all eight corners land on the expected box
  for (const auto& v : n.vertices) {
    CHECK(std::abs(std::abs(v.x()) - 0.45) < 1e-12);
    CHECK(std::abs(std::abs(v.y()) - 0.225) < 1e-12);
    CHECK(std::abs(std::abs(v.z()) - 0.225) < 1e-12);
  }
}

TEST_CASE("normalize_mesh rejects empty input") {
  CHECK_THROWS_AS(normalize_mesh(TriangleMesh{}, 0.45), DataError);
}

TEST_CASE("signed_distance: icosphere center is -1 within 1e-2") {
  // analytic oracle: SDF of the unit sphere at the origin is -1; the
  // icosahedral mesh approximates the sphere from inside
  const MeshSdf sdf(make_icosphere(1.0, 4));
  CHECK(sdf.signed_distance({0, 0, 0}) == doctest::Approx(-1.0).epsilon(1e-2));
}

TEST_CASE("signed_distance: a mesh vertex is at distance zero") {
  const TriangleMesh box = make_box({-1, -1, -1}, {1, 1, 1});
  const MeshSdf sdf(box);
  CHECK(sdf.distance(box.vertices[0]) == 0.0);
}

TEST_CASE("signed_distance: box [-1,1]^3 probed at (2,0,0) is +1") {
  const TriangleMesh box = make_box({-1, -1, -1}, {1, 1, 1});
  const MeshSdf sdf(box);
  const Eigen::Vector3d p(2, 0, 0);
  CHECK(sdf.signed_distance(p) == doctest::Approx(1.0).epsilon(1e-12));

  // brute-force oracle: min distance over dense barycentric samples
  double best = 1e300;
  for (const auto& t : box.triangles) {
    const auto &a = box.vertices[t[0]], &b = box.vertices[t[1]],
               &c = box.vertices[t[2]];
    const int grid = 60;
    for (int i = 0; i <= grid; ++i)
      for (int j = 0; j + i <= grid; ++j) {
        const double u = static_cast<double>(i) / grid;
        const double v = static_cast<double>(j) / grid;
        const Eigen::Vector3d q = a + u * (b - a) + v * (c - a);
        best = std::min(best, (p - q).norm());
      }
  }
  CHECK(sdf.distance(p) == doctest::Approx(best).epsilon(1e-3));
}

TEST_CASE("pseudonormal sign agrees with ray parity on a convex mesh") {
  const TriangleMesh sphere = make_icosphere(0.4, 3);
  const MeshSdf sdf(sphere);
  CHECK(sdf.watertight_input());
  Rng rng(19);
  int agree = 0;
  const int total = 3000;
  for (int i = 0; i < total; ++i) {
    const double x = rng.next_uniform() - 0.5;
    const double y = rng.next_uniform() - 0.5;
    const double z = rng.next_uniform() - 0.5;
    const Eigen::Vector3d p(x, y, z);
    const int s1 = sdf.signed_distance(p) >= 0 ? +1 : -1;
    if (s1 == sdf.sign_by_ray_parity(p)) ++agree;
  }
  CHECK(static_cast<double>(agree) / total >= 0.999);
}

TEST_CASE("sample_tsdf: sphere r=0.3 at 32^3, corners clamp to +tau") {
  const TriangleMesh sphere = make_icosphere(0.3, 3);
  TsdfConfig cfg;
  cfg.resolution = 32;
  const VolumeGrid g = sample_tsdf(sphere, cfg);
  CHECK(g.at(0, 0, 0) == 0.1);
  CHECK(g.at(31, 31, 31) == 0.1);
  CHECK(g.at(0, 31, 0) == 0.1);
  // value range within [-tau, tau]
  CHECK(g.values.minCoeff() >= -0.1);
  CHECK(g.values.maxCoeff() <= 0.1);
  // truncation idempotence
  Eigen::ArrayXd reclamped = g.values.min(0.1).max(-0.1);
  CHECK((reclamped == g.values).all());
}

TEST_CASE("sample_tsdf: zero level set within one voxel diagonal of r=0.3") {
  const TriangleMesh sphere = make_icosphere(0.3, 4);
  TsdfConfig cfg;
  cfg.resolution = 64;
  const VolumeGrid g = sample_tsdf(sphere, cfg);
  const double voxel_diag = std::sqrt(3.0) * g.voxel_size();
  // walk rays from the center; locate the trilinear sign change by bisection
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Vector3d dir(rng.next_normal(), rng.next_normal(), rng.next_normal());
    dir.normalize();
    double lo = 0.05, hi = 0.44;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g.sample_trilinear(mid * dir) < 0 ? lo : hi) = mid;
    }
    CHECK(std::abs(lo - 0.3) < voxel_diag);
  }
}

TEST_CASE("sample_tsdf rejects invalid configs") {
  const TriangleMesh sphere = make_icosphere(0.3, 1);
  TsdfConfig cfg;
  cfg.resolution = 48;
  CHECK_THROWS_AS(sample_tsdf(sphere, cfg), ConfigError);
  cfg.resolution = 4;
  CHECK_THROWS_AS(sample_tsdf(sphere, cfg), ConfigError);
  cfg.resolution = 32;
  cfg.truncation = 0.6;  // tau > extent
  CHECK_THROWS_AS(sample_tsdf(sphere, cfg), ConfigError);
}

TEST_CASE("grid index -> location -> nearest index round trip") {
  VolumeGrid g(16, 0.45, 0.0);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      for (int k = 0; k < 16; ++k) {
        const Eigen::Vector3i idx = g.nearest_index(g.position(i, j, k));
        CHECK(idx == Eigen::Vector3i(i, j, k));
      }
}

TEST_CASE("vol file round trip") {
  VolumeGrid g = analytic_sphere_tsdf(16, 0.45, 0.2, 0.1);
  const std::string path = "/tmp/waveshape_test_grid.vol";
  write_vol(path, g);
  const VolumeGrid back = read_vol(path);
  CHECK(back.res == 16);
  CHECK(back.extent == doctest::Approx(0.45));
  CHECK(back.truncation == doctest::Approx(0.1));
  CHECK(max_abs_diff(back.values, g.values) < 1e-7);

  // header magic check
  std::ofstream bad(path, std::ios::binary);
  bad.write("XXXX0000000000000000", 20);
  bad.close();
  CHECK_THROWS_AS(read_vol(path), DataError);
  std::remove(path.c_str());
}

TEST_CASE("obj load: fan triangulation, degenerate cleanup, save round trip") {
  const std::string path = "/tmp/waveshape_test_mesh.obj";
  {
    std::ofstream os(path);
    os << "# comment\n";
    os << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\n";
    os << "f 1 2 3 4\n";      // quad, fan-triangulated into two
    os << "f 1/1 2/2 5/5\n";  // with texture indices
    os << "f 1 1 2\n";        // degenerate, dropped
  }
  const TriangleMesh m = load_obj(path);
  CHECK(m.vertices.size() == 5);
  CHECK(m.triangles.size() == 3);

  save_obj(path, m);
  const TriangleMesh back = load_obj(path);
  CHECK(back.triangles.size() == m.triangles.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i)
    CHECK((back.vertices[i] - m.vertices[i]).norm() < 1e-8);

  {
    std::ofstream os(path);
    os << "v 0 0 0\nf 1 1 1\n";
  }
  CHECK_THROWS_AS(load_obj(path), DataError);  // nothing usable
  {
    std::ofstream os(path);
    os << "v 0 0 0\nv 1 0 0\nf 1 2 7\n";
  }
  CHECK_THROWS_AS(load_obj(path), DataError);  // index out of range
  std::remove(path.c_str());
}
