#include "waveshape/wavelet.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace waveshape {

namespace {

// Whole-sample symmetric extension of a length-n signal (period 2n-2):
// ... x2 x1 | x0 x1 ... x_{n-1} | x_{n-2} x_{n-3} ...
inline int reflect_ws(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    else i = 2 * (n - 1) - i;
  }
  return i;
}

// Subband extensions induced by whole-sample extension of the parent signal
// with the lowpass output on the even lattice and the highpass on the odd
// lattice. The approximation subband is whole-sample symmetric on the left
// and half-sample on the right; the detail subband is the reverse.
inline int reflect_approx(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    else i = 2 * n - 1 - i;
  }
  return i;
}

inline int reflect_detail(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    else i = 2 * (n - 1) - i;
  }
  return i;
}

inline int parity_sign(int k, int origin) {
  return ((k - origin) & 1) ? -1 : 1;
}

}  // namespace

int FilterBank::max_filter_length() const {
  return static_cast<int>(std::max(
      std::max(analysis_lowpass.size(), analysis_highpass.size()),
      std::max(synthesis_lowpass.size(), synthesis_highpass.size())));
}

FilterBank bior6_8() {
  // Biorthogonal spline-family bank (Cohen-Daubechies-Feauveau), the
  // closer-length member with six zeros at pi on the synthesis lowpass and
  // eight on the analysis lowpass (17/11 taps). Coefficients come from the
  // exact factorization of the Bezout polynomial and are validated by the
  // perfect-reconstruction test rather than transcribed constants. DC gain
  // sqrt(2) per filter; highpass filters are the parity-modulated partners.
  static const double ana[17] = {
      0.0019088317364850262,  -0.0019142861290808863, -0.016990639867607099,
      0.011934565279726731,   0.049732903490937654,   -0.077263173167211342,
      -0.094059203495761630,  0.42079628460983926,    0.82592299745843962,
      0.42079628460983926,    -0.094059203495761630,  -0.077263173167211342,
      0.049732903490937654,   0.011934565279726731,   -0.016990639867607099,
      -0.0019142861290808863, 0.0019088317364850262};
  static const double syn[11] = {
      0.014426282505622247,  0.014467504896774099, -0.078722001062668717,
      -0.040367979030381904, 0.41784910915032023,  0.75890772945376313,
      0.41784910915032023,   -0.040367979030381904, -0.078722001062668717,
      0.014467504896774099,  0.014426282505622247};

  FilterBank fb;
  fb.name = "bior6.8";
  fb.analysis_lowpass = Eigen::Map<const Eigen::ArrayXd>(ana, 17);
  fb.synthesis_lowpass = Eigen::Map<const Eigen::ArrayXd>(syn, 11);
  fb.analysis_lowpass_origin = 8;
  fb.synthesis_lowpass_origin = 5;

  fb.analysis_highpass.resize(11);
  for (int k = 0; k < 11; ++k)
    fb.analysis_highpass[k] = parity_sign(k, 5) * fb.synthesis_lowpass[k];
  fb.analysis_highpass_origin = 5;
  fb.synthesis_highpass.resize(17);
  for (int k = 0; k < 17; ++k)
    fb.synthesis_highpass[k] = parity_sign(k, 8) * fb.analysis_lowpass[k];
  fb.synthesis_highpass_origin = 8;
  fb.highpass_phase = 1;
  return fb;
}

FilterBank haar() {
  const double r = 1.0 / std::sqrt(2.0);
  FilterBank fb;
  fb.name = "haar";
  fb.analysis_lowpass.resize(2);
  fb.analysis_lowpass << r, r;
  fb.analysis_highpass.resize(2);
  fb.analysis_highpass << r, -r;
  fb.synthesis_lowpass.resize(2);
  fb.synthesis_lowpass << r, r;
  fb.synthesis_highpass.resize(2);
  fb.synthesis_highpass << r, -r;
  fb.analysis_lowpass_origin = 0;
  fb.analysis_highpass_origin = 0;
  fb.synthesis_lowpass_origin = 0;
  fb.synthesis_highpass_origin = 0;
  fb.highpass_phase = 0;
  return fb;
}

FilterBank filter_bank(const std::string& name) {
  if (name == "bior6.8") return bior6_8();
  if (name == "haar") return haar();
  throw ConfigError("unknown filter bank: " + name + " (expected bior6.8 or haar)");
}

namespace {

// One lowpass analysis pass over a strided fiber: filter, keep even phase.
void lowpass_fiber(const double* src, int n, std::int64_t stride, double* dst,
                   std::int64_t dst_stride, const FilterBank& fb) {
  const auto& h = fb.analysis_lowpass;
  const int origin = fb.analysis_lowpass_origin;
  const int len = static_cast<int>(h.size());
  const int half = n / 2;
  for (int i = 0; i < half; ++i) {
    double acc = 0.0;
    for (int k = 0; k < len; ++k)
      acc += h[k] * src[stride * reflect_ws(2 * i + k - origin, n)];
    dst[dst_stride * i] = acc;
  }
}

// One lowpass synthesis pass: upsample the approximation subband (details
// treated as zero) using the subband extension rules.
void upsample_fiber(const double* src, int half, std::int64_t stride, double* dst,
                    std::int64_t dst_stride, const FilterBank& fb) {
  const auto& g = fb.synthesis_lowpass;
  const int origin = fb.synthesis_lowpass_origin;
  const int len = static_cast<int>(g.size());
  const int n = 2 * half;
  for (int m = 0; m < n; ++m) {
    double acc = 0.0;
    for (int k = 0; k < len; ++k) {
      const int t = m - (k - origin);
      if (t & 1) continue;
      acc += g[k] * src[stride * reflect_approx(t / 2, half)];
    }
    dst[dst_stride * m] = acc;
  }
}

using FiberFn = void (*)(const double*, int, std::int64_t, double*, std::int64_t,
                         const FilterBank&);

// Apply a fiber transform along one axis of a (d0, d1, d2) z-fastest block.
Eigen::ArrayXd axis_pass(const Eigen::ArrayXd& src, int d0, int d1, int d2,
                         int axis, int out_len, FiberFn fn, const FilterBank& fb) {
  int od0 = d0, od1 = d1, od2 = d2;
  (axis == 0 ? od0 : axis == 1 ? od1 : od2) = out_len;
  Eigen::ArrayXd dst(static_cast<std::int64_t>(od0) * od1 * od2);

  const int in_len = axis == 0 ? d0 : axis == 1 ? d1 : d2;
  // iterate over the two non-transformed axes
  const int ua = axis == 0 ? 1 : 0;
  const int va = axis == 2 ? 1 : 2;
  const int nu = ua == 0 ? d0 : ua == 1 ? d1 : d2;
  const int nv = va == 1 ? d1 : d2;

  auto in_stride = [&](int a) -> std::int64_t {
    return a == 0 ? static_cast<std::int64_t>(d1) * d2 : a == 1 ? d2 : 1;
  };
  auto out_stride = [&](int a) -> std::int64_t {
    return a == 0 ? static_cast<std::int64_t>(od1) * od2 : a == 1 ? od2 : 1;
  };

#ifdef _OPENMP
#pragma omp parallel for schedule(static) collapse(2)
#endif
  for (int u = 0; u < nu; ++u) {
    for (int v = 0; v < nv; ++v) {
      const std::int64_t in_off = u * in_stride(ua) + v * in_stride(va);
      const std::int64_t out_off = u * out_stride(ua) + v * out_stride(va);
      fn(src.data() + in_off, in_len, in_stride(axis), dst.data() + out_off,
         out_stride(axis), fb);
    }
  }
  return dst;
}

}  // namespace

void analyze_1d(const Eigen::ArrayXd& x, const FilterBank& fb,
                Eigen::ArrayXd& approx, Eigen::ArrayXd& detail) {
  const int n = static_cast<int>(x.size());
  if (n < 2 || (n & 1)) throw DataError("analyze_1d: signal length must be even");
  const int half = n / 2;
  approx.resize(half);
  detail.resize(half);
  lowpass_fiber(x.data(), n, 1, approx.data(), 1, fb);
  const auto& h = fb.analysis_highpass;
  const int origin = fb.analysis_highpass_origin;
  for (int i = 0; i < half; ++i) {
    double acc = 0.0;
    for (int k = 0; k < static_cast<int>(h.size()); ++k)
      acc += h[k] * x[reflect_ws(2 * i + fb.highpass_phase + k - origin, n)];
    detail[i] = acc;
  }
}

Eigen::ArrayXd synthesize_1d(const Eigen::ArrayXd& approx,
                             const Eigen::ArrayXd& detail, const FilterBank& fb) {
  const int half = static_cast<int>(approx.size());
  if (detail.size() != half)
    throw DataError("synthesize_1d: subband sizes differ");
  const int n = 2 * half;
  Eigen::ArrayXd x(n);
  const auto& g0 = fb.synthesis_lowpass;
  const auto& g1 = fb.synthesis_highpass;
  for (int m = 0; m < n; ++m) {
    double acc = 0.0;
    for (int k = 0; k < static_cast<int>(g0.size()); ++k) {
      const int t = m - (k - fb.synthesis_lowpass_origin);
      if (t & 1) continue;
      acc += g0[k] * approx[reflect_approx(t / 2, half)];
    }
    for (int k = 0; k < static_cast<int>(g1.size()); ++k) {
      const int t = m - fb.highpass_phase - (k - fb.synthesis_highpass_origin);
      if (t & 1) continue;
      acc += g1[k] * detail[reflect_detail(t / 2, half)];
    }
    x[m] = acc;
  }
  return x;
}

VolumeGrid dwt3_coarse(const VolumeGrid& volume, const FilterBank& fb) {
  const int n = volume.res;
  if (n < 2 || (n & 1)) throw DataError("dwt3_coarse: resolution must be even");
  const int half = n / 2;
  Eigen::ArrayXd a = axis_pass(volume.values, n, n, n, 2, half, lowpass_fiber, fb);
  a = axis_pass(a, n, n, half, 1, half, lowpass_fiber, fb);
  a = axis_pass(a, n, half, half, 0, half, lowpass_fiber, fb);
  VolumeGrid out(half, volume.extent, 0.0);
  out.values = std::move(a);
  return out;
}

VolumeGrid idwt3_coarse(const VolumeGrid& coarse, const FilterBank& fb) {
  const int half = coarse.res;
  const int n = 2 * half;
  Eigen::ArrayXd a =
      axis_pass(coarse.values, half, half, half, 0, n, upsample_fiber, fb);
  a = axis_pass(a, n, half, half, 1, n, upsample_fiber, fb);
  a = axis_pass(a, n, n, half, 2, n, upsample_fiber, fb);
  VolumeGrid out(n, coarse.extent, 0.0);
  out.values = std::move(a);
  return out;
}

PyramidLevels decompose(const VolumeGrid& tsdf, const FilterBank& fb, int levels) {
  if (levels < 1) throw ConfigError("decompose: level must be >= 1");
  if (tsdf.res % (1 << levels) != 0)
    throw DataError("decompose: resolution not divisible by 2^level");
  PyramidLevels out;
  out.source_meta = TsdfConfig{tsdf.res, tsdf.extent, tsdf.truncation};
  VolumeGrid current = tsdf;
  for (int j = 1; j <= levels; ++j) {
    VolumeGrid coarse = dwt3_coarse(current, fb);
    VolumeGrid up = idwt3_coarse(coarse, fb);
    VolumeGrid detail(current.res, current.extent, 0.0);
    detail.values = current.values - up.values;
    out.coarse_chain.push_back(coarse);
    out.detail_chain.push_back(std::move(detail));
    current = std::move(coarse);
  }
  return out;
}

VolumeGrid reconstruct_full(const PyramidLevels& levels, const FilterBank& fb) {
  const int depth = levels.depth();
  if (depth == 0) throw DataError("reconstruct_full: empty pyramid");
  VolumeGrid current = levels.coarse_chain.back();
  for (int j = depth; j >= 1; --j) {
    VolumeGrid up = idwt3_coarse(current, fb);
    up.values += levels.detail_chain[j - 1].values;
    current = std::move(up);
  }
  current.extent = levels.source_meta.extent;
  current.truncation = levels.source_meta.truncation;
  return current;
}

WaveletPair compact_pair(const PyramidLevels& levels) {
  const int depth = levels.depth();
  if (depth == 0) throw DataError("compact_pair: empty pyramid");
  WaveletPair pair;
  pair.level = depth;
  pair.coarse = levels.coarse_chain.back();
  pair.detail = levels.detail_chain.back();
  pair.source_meta = levels.source_meta;
  return pair;
}

VolumeGrid reconstruct_from_pair(const WaveletPair& pair, const FilterBank& fb) {
  if (pair.coarse.res * 2 != pair.detail.res)
    throw DataError("reconstruct_from_pair: detail resolution must be 2x coarse");
  VolumeGrid current = idwt3_coarse(pair.coarse, fb);
  current.values += pair.detail.values;
  for (int j = pair.level - 1; j >= 1; --j) current = idwt3_coarse(current, fb);
  current.extent = pair.source_meta.extent;
  current.truncation = pair.source_meta.truncation;
  return current;
}

void write_wvp(const std::string& path, const WaveletPair& pair) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for write: " + path);
  os.write("WVPR", 4);
  const std::uint32_t level = static_cast<std::uint32_t>(pair.level);
  os.write(reinterpret_cast<const char*>(&level), 4);
  // The embedded coarse header carries the source TSDF truncation so the
  // pair's provenance round-trips; the volumes themselves are not TSDFs.
  VolumeGrid coarse = pair.coarse;
  coarse.extent = pair.source_meta.extent;
  coarse.truncation = pair.source_meta.truncation;
  VolumeGrid detail = pair.detail;
  detail.extent = pair.source_meta.extent;
  detail.truncation = 0.0;
  write_vol_stream(os, coarse);
  write_vol_stream(os, detail);
  if (!os) throw DataError("write failed: " + path);
}

WaveletPair read_wvp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "WVPR", 4) != 0)
    throw DataError("wavelet pair file: bad magic (expected WVPR)");
  std::uint32_t level = 0;
  is.read(reinterpret_cast<char*>(&level), 4);
  WaveletPair pair;
  pair.level = static_cast<int>(level);
  pair.coarse = read_vol_stream(is);
  pair.detail = read_vol_stream(is);
  if (pair.coarse.res * 2 != pair.detail.res)
    throw DataError("wavelet pair file: inconsistent resolutions");
  pair.source_meta.resolution = pair.coarse.res << pair.level;
  pair.source_meta.extent = pair.coarse.extent;
  pair.source_meta.truncation = pair.coarse.truncation;
  pair.coarse.truncation = 0.0;
  return pair;
}

}  // namespace waveshape
