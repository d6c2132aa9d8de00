#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "waveshape/mesh.hpp"
#include "waveshape/rng.hpp"

namespace waveshape {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;

  std::size_t size() const { return points.size(); }
};

/// Area-proportional uniform surface sampling, deterministic per seed.
PointCloud sample_surface(const TriangleMesh& mesh, int count, std::uint64_t seed);

/// Chamfer distance, squared-distance convention:
/// mean_a min_b |a-b|^2 + mean_b min_a |a-b|^2.
double chamfer(const PointCloud& a, const PointCloud& b);

/// Earth mover's distance: (1/n) min over bijections of the summed Euclidean
/// distances, solved exactly by optimal assignment. Requires |a| == |b| and
/// n <= 1024 (larger clouds are subsampled by the callers).
double emd(const PointCloud& a, const PointCloud& b);

/// Exact minimum-cost perfect matching on a square cost matrix
/// (Jonker-Volgenant shortest augmenting paths). Returns the column assigned
/// to each row. Exposed for tests.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

enum class PairDistance { kChamfer, kEmd };

/// Pairwise distance matrix d(gen_i, ref_j); parallel across pairs.
Eigen::MatrixXd pairwise_distances(const std::vector<PointCloud>& gen,
                                   const std::vector<PointCloud>& ref,
                                   PairDistance d);

/// Fidelity: mean over references of the closest generated distance.
double mmd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
           PairDistance d);

/// Diversity: fraction of references that are the nearest reference of some
/// generated cloud. Ties break toward the lowest index.
double coverage(const std::vector<PointCloud>& gen,
                const std::vector<PointCloud>& ref, PairDistance d);

/// Leave-one-out 1-NN classification accuracy on the union (0.5 is ideal).
double one_nna(const std::vector<PointCloud>& gen,
               const std::vector<PointCloud>& ref, PairDistance d);

/// Set-metric summary. MMD values are stored in reporting units (CD scaled
/// by 1e-3, EMD by 1e-2); COV and 1-NNA are fractions in [0, 1]. The raw
/// gen-by-ref distance matrices are kept for inspection.
struct MetricReport {
  double mmd_cd = 0, mmd_emd = 0;
  double cov_cd = 0, cov_emd = 0;
  double nna_cd = 0, nna_emd = 0;
  Eigen::MatrixXd cd_matrix;   // gen rows x ref cols, raw distances
  Eigen::MatrixXd emd_matrix;
};

MetricReport compute_metrics(const std::vector<PointCloud>& gen,
                             const std::vector<PointCloud>& ref);

/// Variant with separate (typically subsampled to <= 1024 points) clouds for
/// the exact EMD solver; CD metrics use the full clouds.
MetricReport compute_metrics(const std::vector<PointCloud>& gen,
                             const std::vector<PointCloud>& ref,
                             const std::vector<PointCloud>& gen_emd,
                             const std::vector<PointCloud>& ref_emd);

/// CSV rows: metric,distance_kind,value,unit_scale where value is the scaled
/// (table-convention) number and raw = value * unit_scale.
void write_metric_csv(const std::string& path, const MetricReport& report);

}  // namespace waveshape
