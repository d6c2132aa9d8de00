#include "waveshape/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "waveshape/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace waveshape {

PointCloud sample_surface(const TriangleMesh& mesh, int count, std::uint64_t seed) {
  if (mesh.triangles.empty()) throw DataError("sample_surface: empty mesh");
  std::vector<double> cum(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    const auto& t = mesh.triangles[f];
    total += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                           mesh.vertices[t[2]]);
    cum[f] = total;
  }
  if (!(total > 0.0)) throw DataError("sample_surface: zero-area mesh");

  Rng rng(seed);
  PointCloud cloud;
  cloud.points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double pick = rng.next_uniform() * total;
    const std::size_t f =
        std::min(static_cast<std::size_t>(
                     std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin()),
                 cum.size() - 1);
    const auto& t = mesh.triangles[f];
    const double r1 = rng.next_uniform();
    const double r2 = rng.next_uniform();
    const double s = std::sqrt(r1);
    // uniform barycentric sampling
    const Eigen::Vector3d p = (1.0 - s) * mesh.vertices[t[0]] +
                              s * (1.0 - r2) * mesh.vertices[t[1]] +
                              s * r2 * mesh.vertices[t[2]];
    cloud.points.push_back(p);
  }
  return cloud;
}

namespace {

double min_sq_dist(const Eigen::Vector3d& p, const std::vector<Eigen::Vector3d>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : pts) best = std::min(best, (p - q).squaredNorm());
  return best;
}

}  // namespace

double chamfer(const PointCloud& a, const PointCloud& b) {
  if (a.points.empty() || b.points.empty())
    throw DataError("chamfer: empty point cloud");
  double sum_ab = 0.0, sum_ba = 0.0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : sum_ab)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.points.size()); ++i)
    sum_ab += min_sq_dist(a.points[i], b.points);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : sum_ba)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(b.points.size()); ++i)
    sum_ba += min_sq_dist(b.points[i], a.points);
  return sum_ab / a.points.size() + sum_ba / b.points.size();
}

double emd(const PointCloud& a, const PointCloud& b) {
  const int n = static_cast<int>(a.points.size());
  if (n == 0 || b.points.size() != a.points.size())
    throw DataError("emd: clouds must be non-empty and of equal size");
  if (n > 1024)
    throw DataError("emd: exact solver limited to 1024 points; subsample first");
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost(i, j) = (a.points[i] - b.points[j]).norm();
  const std::vector<int> assign = solve_assignment(cost);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost(i, assign[i]);
  return total / n;
}

Eigen::MatrixXd pairwise_distances(const std::vector<PointCloud>& gen,
                                   const std::vector<PointCloud>& ref,
                                   PairDistance d) {
  Eigen::MatrixXd m(gen.size(), ref.size());
  const std::int64_t total = static_cast<std::int64_t>(gen.size()) *
                             static_cast<std::int64_t>(ref.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t idx = 0; idx < total; ++idx) {
    const auto i = static_cast<std::size_t>(idx / ref.size());
    const auto j = static_cast<std::size_t>(idx % ref.size());
    m(i, j) = d == PairDistance::kChamfer ? chamfer(gen[i], ref[j])
                                          : emd(gen[i], ref[j]);
  }
  return m;
}

double mmd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
           PairDistance d) {
  if (gen.empty() || ref.empty()) throw DataError("mmd: empty set");
  const Eigen::MatrixXd m = pairwise_distances(gen, ref, d);
  return m.colwise().minCoeff().mean();
}

double coverage(const std::vector<PointCloud>& gen,
                const std::vector<PointCloud>& ref, PairDistance d) {
  if (gen.empty() || ref.empty()) throw DataError("coverage: empty set");
  const Eigen::MatrixXd m = pairwise_distances(gen, ref, d);
  std::vector<char> hit(ref.size(), 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j)
      if (m(i, j) < m(i, best)) best = static_cast<int>(j);
    hit[best] = 1;
  }
  int covered = 0;
  for (char h : hit) covered += h;
  return static_cast<double>(covered) / static_cast<double>(ref.size());
}

namespace {

double one_nna_from_matrix(const Eigen::MatrixXd& full, std::size_t ng) {
  const std::size_t total = full.rows();
  int correct = 0;
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t best = i == 0 ? 1 : 0;
    for (std::size_t j = 0; j < total; ++j) {
      if (j == i) continue;
      if (full(i, j) < full(i, best)) best = j;
    }
    const bool same = (i < ng) == (best < ng);
    correct += same ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

Eigen::MatrixXd union_matrix(const std::vector<PointCloud>& gen,
                             const std::vector<PointCloud>& ref, PairDistance d) {
  std::vector<PointCloud> all;
  all.reserve(gen.size() + ref.size());
  all.insert(all.end(), gen.begin(), gen.end());
  all.insert(all.end(), ref.begin(), ref.end());
  Eigen::MatrixXd full = pairwise_distances(all, all, d);
  full.diagonal().setZero();
  return full;
}

}  // namespace

double one_nna(const std::vector<PointCloud>& gen,
               const std::vector<PointCloud>& ref, PairDistance d) {
  if (gen.size() < 2 || ref.size() < 2)
    throw DataError("one_nna: both sets need at least two clouds");
  return one_nna_from_matrix(union_matrix(gen, ref, d), gen.size());
}

MetricReport compute_metrics(const std::vector<PointCloud>& gen,
                             const std::vector<PointCloud>& ref) {
  return compute_metrics(gen, ref, gen, ref);
}

MetricReport compute_metrics(const std::vector<PointCloud>& gen,
                             const std::vector<PointCloud>& ref,
                             const std::vector<PointCloud>& gen_emd,
                             const std::vector<PointCloud>& ref_emd) {
  if (gen.size() < 2 || ref.size() < 2)
    throw DataError("compute_metrics: both sets need at least two clouds");
  if (gen_emd.size() != gen.size() || ref_emd.size() != ref.size())
    throw DataError("compute_metrics: EMD set sizes must match");
  MetricReport r;
  for (const PairDistance d : {PairDistance::kChamfer, PairDistance::kEmd}) {
    const Eigen::MatrixXd full = d == PairDistance::kChamfer
                                     ? union_matrix(gen, ref, d)
                                     : union_matrix(gen_emd, ref_emd, d);
    const std::size_t ng = gen.size();
    const Eigen::MatrixXd cross =
        full.block(0, ng, ng, ref.size());  // gen rows x ref cols

    const double mmd_raw = cross.colwise().minCoeff().mean();
    std::vector<char> hit(ref.size(), 0);
    for (std::size_t i = 0; i < ng; ++i) {
      int best = 0;
      for (Eigen::Index j = 1; j < cross.cols(); ++j)
        if (cross(i, j) < cross(i, best)) best = static_cast<int>(j);
      hit[best] = 1;
    }
    int covered = 0;
    for (char h : hit) covered += h;
    const double cov = static_cast<double>(covered) / ref.size();
    const double nna = one_nna_from_matrix(full, ng);

    if (d == PairDistance::kChamfer) {
      r.mmd_cd = mmd_raw / 1e-3;  // reported in units of 1e-3
      r.cov_cd = cov;
      r.nna_cd = nna;
      r.cd_matrix = cross;
    } else {
      r.mmd_emd = mmd_raw / 1e-2;  // reported in units of 1e-2
      r.cov_emd = cov;
      r.nna_emd = nna;
      r.emd_matrix = cross;
    }
  }
  return r;
}

void write_metric_csv(const std::string& path, const MetricReport& r) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for write: " + path);
  os << "metric,distance_kind,value,unit_scale\n";
  os << "MMD,CD," << r.mmd_cd << ",1e-3\n";
  os << "MMD,EMD," << r.mmd_emd << ",1e-2\n";
  os << "COV,CD," << r.cov_cd << ",1\n";
  os << "COV,EMD," << r.cov_emd << ",1\n";
  os << "1-NNA,CD," << r.nna_cd << ",1\n";
  os << "1-NNA,EMD," << r.nna_emd << ",1\n";
  if (!os) throw DataError("write failed: " + path);
}

}  // namespace waveshape
