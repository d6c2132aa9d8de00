#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "waveshape/grid.hpp"
#include "waveshape/sdf.hpp"

namespace waveshape {

/// Two-channel biorthogonal filter bank. Filters are stored with an explicit
/// origin: tap index k of a filter array f with origin c weights the sample at
/// signal offset (k - c). highpass_phase places the highpass output lattice at
/// even (0) or odd (1) signal positions.
///
/// All shipped banks are normalized to DC gain sqrt(2) on both lowpass
/// filters and satisfy perfect reconstruction with the symmetric-extension
/// transforms below to near machine precision.
struct FilterBank {
  Eigen::ArrayXd analysis_lowpass;
  Eigen::ArrayXd analysis_highpass;
  Eigen::ArrayXd synthesis_lowpass;
  Eigen::ArrayXd synthesis_highpass;
  int analysis_lowpass_origin = 0;
  int analysis_highpass_origin = 0;
  int synthesis_lowpass_origin = 0;
  int synthesis_highpass_origin = 0;
  int highpass_phase = 0;
  std::string name;

  int max_filter_length() const;
};

/// Biorthogonal spline bank: synthesis wavelet with 6 vanishing moments,
/// analysis wavelet with 8 (Cohen-Daubechies-Feauveau construction; filter
/// lengths 19/9). The default bank for shape encoding.
FilterBank bior6_8();

/// Two-tap Haar bank, shipped for the blocky-reconstruction comparison.
FilterBank haar();

/// Look up a bank by name ("bior6.8" or "haar").
FilterBank filter_bank(const std::string& name);

/// One analysis level of a 1D signal (even length n) into n/2 approximation
/// and n/2 detail coefficients, whole-sample symmetric extension.
void analyze_1d(const Eigen::ArrayXd& x, const FilterBank& fb,
                Eigen::ArrayXd& approx, Eigen::ArrayXd& detail);

/// Inverse of analyze_1d; exact for perfect-reconstruction banks.
Eigen::ArrayXd synthesize_1d(const Eigen::ArrayXd& approx,
                             const Eigen::ArrayXd& detail,
                             const FilterBank& fb);

/// Coarse (lowpass) branch of the separable 3D analysis transform: filter and
/// downsample by two along each axis. Output resolution is half per axis.
VolumeGrid dwt3_coarse(const VolumeGrid& volume, const FilterBank& fb);

/// Lowpass branch of the separable 3D synthesis transform with all detail
/// subbands zero: upsample by two and filter along each axis.
VolumeGrid idwt3_coarse(const VolumeGrid& coarse, const FilterBank& fb);

/// Compact shape encoding: the coarse coefficient volume at scale J together
/// with the Laplacian-pyramid detail at the same scale (one level finer in
/// resolution). source_meta records the TSDF sampling the pair came from.
struct WaveletPair {
  int level = 0;
  VolumeGrid coarse;
  VolumeGrid detail;
  TsdfConfig source_meta;
};

/// Full multi-scale decomposition: coarse_chain[j-1] holds C^j and
/// detail_chain[j-1] holds D^j = C^{j-1} - idwt3_coarse(C^j), with C^0 the
/// input volume. The pyramid is lossless by construction.
struct PyramidLevels {
  std::vector<VolumeGrid> coarse_chain;
  std::vector<VolumeGrid> detail_chain;
  TsdfConfig source_meta;

  int depth() const { return static_cast<int>(coarse_chain.size()); }
};

PyramidLevels decompose(const VolumeGrid& tsdf, const FilterBank& fb, int levels);

/// Invert a full pyramid back to the original volume (exact).
VolumeGrid reconstruct_full(const PyramidLevels& levels, const FilterBank& fb);

/// Keep only (C^J, D^J); D^1..D^{J-1} are dropped.
WaveletPair compact_pair(const PyramidLevels& levels);

/// Reconstruct a volume at the original resolution from a compact pair:
/// C^{J-1} = idwt3_coarse(C^J) + D^J, then J-1 further coarse inverses.
VolumeGrid reconstruct_from_pair(const WaveletPair& pair, const FilterBank& fb);

/// ".wvp" file: magic "WVPR", u32 LE level J, then the coarse and detail
/// volumes as two embedded .vol payloads.
void write_wvp(const std::string& path, const WaveletPair& pair);
WaveletPair read_wvp(const std::string& path);

}  // namespace waveshape
