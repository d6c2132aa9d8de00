#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "support.hpp"
#include "waveshape/wavelet.hpp"

using namespace waveshape;
using namespace testsupport;

TEST_CASE("filter banks have sqrt2 DC gain and expected lengths") {
  const FilterBank b = bior6_8();
  CHECK(b.analysis_lowpass.size() == 17);
  CHECK(b.synthesis_lowpass.size() == 11);
  CHECK(b.analysis_lowpass.sum() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(b.synthesis_lowpass.sum() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  // highpass filters kill constants
  CHECK(std::abs(b.analysis_highpass.sum()) < 1e-14);
  CHECK(std::abs(b.synthesis_highpass.sum()) < 1e-14);

  const FilterBank h = haar();
  CHECK(h.analysis_lowpass.sum() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(filter_bank("db4"), ConfigError);
}

TEST_CASE("1D perfect reconstruction: 1000 random signals per bank") {
  Rng rng(7);
  for (const FilterBank& fb : {bior6_8(), haar()}) {
    double worst = 0.0;
    const int lengths[3] = {32, 64, 128};
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = lengths[trial % 3];
      Eigen::ArrayXd x(n);
      for (int i = 0; i < n; ++i) x[i] = rng.next_normal();
      Eigen::ArrayXd approx, detail;
      analyze_1d(x, fb, approx, detail);
      const Eigen::ArrayXd back = synthesize_1d(approx, detail, fb);
      worst = std::max(worst, rel_linf(back, x));
    }
    INFO(fb.name);
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("1D PR also holds at short signal lengths") {
  Rng rng(11);
  for (const FilterBank& fb : {bior6_8(), haar()}) {
    for (const int n : {4, 8, 16}) {
      for (int trial = 0; trial < 50; ++trial) {
        Eigen::ArrayXd x(n);
        for (int i = 0; i < n; ++i) x[i] = rng.next_normal();
        Eigen::ArrayXd a, d;
        analyze_1d(x, fb, a, d);
        CHECK(rel_linf(synthesize_1d(a, d, fb), x) <= 1e-10);
      }
    }
  }
}

TEST_CASE("odd-length input is rejected") {
  Eigen::ArrayXd x(7);
  x.setZero();
  Eigen::ArrayXd a, d;
  CHECK_THROWS_AS(analyze_1d(x, bior6_8(), a, d), DataError);

  VolumeGrid v;
  v.res = 13;  // odd resolution
  v.extent = 0.45;
  v.values = Eigen::ArrayXd::Zero(13 * 13 * 13);
  CHECK_THROWS_AS(dwt3_coarse(v, bior6_8()), DataError);
}

TEST_CASE("dwt3_coarse of a constant volume is the constant times 2^(3/2)") {
  for (const FilterBank& fb : {bior6_8(), haar()}) {
    VolumeGrid v(16, 0.45, 0.0);
    v.values.setConstant(3.25);
    const VolumeGrid c = dwt3_coarse(v, fb);
    CHECK(c.res == 8);
    const double expected = 3.25 * std::pow(2.0, 1.5);
    CHECK(max_abs_diff(c.values,
                       Eigen::ArrayXd::Constant(c.values.size(), expected)) < 1e-10);
  }
}

TEST_CASE("dwt3_coarse resolution bookkeeping: 64 -> 32") {
  Rng rng(3);
  const VolumeGrid v = random_volume(64, rng);
  const VolumeGrid c = dwt3_coarse(v, bior6_8());
  CHECK(c.res == 32);
  CHECK(c.all_finite());
}

TEST_CASE("separable transform equals brute-force direct convolution oracle") {
  Rng rng(5);
  for (const FilterBank& fb : {bior6_8(), haar()}) {
    const VolumeGrid v = random_volume(8, rng);
    const VolumeGrid got = dwt3_coarse(v, fb);
    const VolumeGrid want =
        dwt3_coarse_oracle(v, fb.analysis_lowpass, fb.analysis_lowpass_origin);
    INFO(fb.name);
    CHECK(max_abs_diff(got.values, want.values) < 1e-11);
  }
  // impulse at the center: output is the decimated reversed-filter outer product
  VolumeGrid imp(16, 0.45, 0.0);
  imp.at(8, 8, 8) = 1.0;
  const FilterBank fb = bior6_8();
  const VolumeGrid got = dwt3_coarse(imp, fb);
  const VolumeGrid want =
      dwt3_coarse_oracle(imp, fb.analysis_lowpass, fb.analysis_lowpass_origin);
  CHECK(max_abs_diff(got.values, want.values) < 1e-12);
}

TEST_CASE("idwt3_coarse: zeros, resolution, smooth round trip") {
  const FilterBank fb = bior6_8();

  VolumeGrid z(16, 0.45, 0.0);
  const VolumeGrid zup = idwt3_coarse(z, fb);
  CHECK(zup.res == 32);
  CHECK(zup.values.abs().maxCoeff() == 0.0);

  // band-limited volume at the default resolution: coarse-only round trip
  // loses < 5% RMS
  Rng rng(17);
  VolumeGrid noise = random_volume(64, rng);
  const VolumeGrid smooth = gaussian_smooth(noise, 4.0);
  const VolumeGrid back = idwt3_coarse(dwt3_coarse(smooth, fb), fb);
  const double rms_err = std::sqrt((back.values - smooth.values).square().mean());
  const double rms_sig = std::sqrt(smooth.values.square().mean());
  CHECK(rms_err / rms_sig < 0.05);
}

TEST_CASE("decompose: unrolled definition at J=1 and zero linearity") {
  const FilterBank fb = bior6_8();
  Rng rng(23);
  const VolumeGrid v = random_volume(16, rng);

  const PyramidLevels p = decompose(v, fb, 1);
  const VolumeGrid up = idwt3_coarse(p.coarse_chain[0], fb);
  Eigen::ArrayXd expect_detail = v.values - up.values;
  CHECK(max_abs_diff(p.detail_chain[0].values, expect_detail) == 0.0);

  VolumeGrid zero(16, 0.45, 0.0);
  const PyramidLevels pz = decompose(zero, fb, 2);
  for (const auto& g : pz.coarse_chain) CHECK(g.values.abs().maxCoeff() == 0.0);
  for (const auto& g : pz.detail_chain) CHECK(g.values.abs().maxCoeff() == 0.0);

  const VolumeGrid v12 = random_volume(12, rng);
  CHECK_THROWS_AS(decompose(v12, fb, 3), DataError);
}

TEST_CASE("full-pyramid losslessness at 32^3 and 64^3 for J in {1,2,3}") {
  Rng rng(29);
  for (const FilterBank& fb : {bior6_8(), haar()}) {
    for (const int res : {32, 64}) {
      for (int levels = 1; levels <= 3; ++levels) {
        const VolumeGrid v = random_volume(res, rng);
        const PyramidLevels p = decompose(v, fb, levels);
        const VolumeGrid back = reconstruct_full(p, fb);
        INFO(fb.name << " res " << res << " J " << levels);
        CHECK(rel_linf(back.values, v.values) <= 1e-8);
      }
    }
  }
}

TEST_CASE("decompose is linear") {
  const FilterBank fb = bior6_8();
  Rng rng(31);
  const VolumeGrid v = random_volume(16, rng);
  const VolumeGrid w = random_volume(16, rng);
  const double a = 1.7, b = -0.6;
  VolumeGrid mix(16, 0.45, 0.0);
  mix.values = a * v.values + b * w.values;

  const PyramidLevels pv = decompose(v, fb, 2);
  const PyramidLevels pw = decompose(w, fb, 2);
  const PyramidLevels pm = decompose(mix, fb, 2);
  for (int j = 0; j < 2; ++j) {
    CHECK(rel_linf(pm.coarse_chain[j].values,
                   (a * pv.coarse_chain[j].values +
                    b * pw.coarse_chain[j].values).eval()) < 1e-10);
    CHECK(rel_linf(pm.detail_chain[j].values,
                   (a * pv.detail_chain[j].values +
                    b * pw.detail_chain[j].values).eval()) < 1e-10);
  }
}

TEST_CASE("compact pair: resolutions, retained fraction, exact level J-1") {
  const FilterBank fb = bior6_8();
  const VolumeGrid v = analytic_sphere_tsdf(64, 0.45, 0.3, 0.1);
  const PyramidLevels p = decompose(v, fb, 3);
  const WaveletPair pair = compact_pair(p);
  CHECK(pair.coarse.res == 8);
  CHECK(pair.detail.res == 16);
  CHECK(pair.level == 3);

  // retained coefficients at paper-scale 256^3 bookkeeping
  const double retained = (32.0 * 32 * 32 + 64.0 * 64 * 64) / (256.0 * 256 * 256);
  CHECK(retained == doctest::Approx(0.017578125));
  CHECK(retained < 0.03);

  // reconstruction reaches C^{J-1} exactly (the detail is its exact residual)
  const VolumeGrid up = idwt3_coarse(pair.coarse, fb);
  Eigen::ArrayXd c2 = up.values + pair.detail.values;
  CHECK(max_abs_diff(c2, p.coarse_chain[1].values) < 1e-12);

  // zero pair reconstructs to zero
  WaveletPair zp;
  zp.level = 3;
  zp.coarse = VolumeGrid(8, 0.45, 0.0);
  zp.detail = VolumeGrid(16, 0.45, 0.0);
  zp.source_meta = TsdfConfig{64, 0.45, 0.1};
  const VolumeGrid zrec = reconstruct_from_pair(zp, fb);
  CHECK(zrec.res == 64);
  CHECK(zrec.values.abs().maxCoeff() == 0.0);
}

TEST_CASE("wvp file round trip preserves both volumes and metadata") {
  const FilterBank fb = bior6_8();
  VolumeGrid v = analytic_sphere_tsdf(32, 0.45, 0.3, 0.1);
  const WaveletPair pair = compact_pair(decompose(v, fb, 2));
  const std::string path = "/tmp/waveshape_test_pair.wvp";
  write_wvp(path, pair);
  const WaveletPair back = read_wvp(path);
  CHECK(back.level == 2);
  CHECK(back.coarse.res == 8);
  CHECK(back.detail.res == 16);
  CHECK(back.source_meta.resolution == 32);
  CHECK(back.source_meta.truncation == doctest::Approx(0.1));
  // f32 storage quantization
  const double cs = pair.coarse.values.abs().maxCoeff();
  const double ds = pair.detail.values.abs().maxCoeff();
  CHECK(max_abs_diff(back.coarse.values, pair.coarse.values) < 1e-6 * cs);
  CHECK(max_abs_diff(back.detail.values, pair.detail.values) < 1e-6 * ds);
  std::remove(path.c_str());
}
