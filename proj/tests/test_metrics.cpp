#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "p2s/denoise.hpp"
#include "p2s/metrics.hpp"
#include "p2s/phantom.hpp"

using namespace p2s;

namespace {

Volume4D line3(std::vector<double> values) {
  return Volume4D({3, 1, 1, 1}, {}, std::move(values));
}

Volume4D scaled(const Volume4D& vol, double s) {
  std::vector<double> data(vol.data().begin(), vol.data().end());
  for (double& v : data) v *= s;
  return Volume4D(vol.dims(), vol.spacing(), std::move(data));
}

}  // namespace

TEST_CASE("identical inputs give rmse zero and r2 one") {
  Volume4D a = line3({1, 2, 3});
  CHECK(rmse(a, a) == 0.0);
  CHECK(r_squared(a, a) == 1.0);
}

TEST_CASE("hand-computed rmse on a three-voxel fixture") {
  Volume4D ref = line3({1, 2, 3});
  Volume4D est = line3({1, 2, 5});
  CHECK(rmse(ref, est) == doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("estimating the reference mean gives r2 zero") {
  Volume4D ref = line3({1, 2, 3});
  Volume4D est = line3({2, 2, 2});
  CHECK(r_squared(ref, est) == doctest::Approx(0.0));
}

TEST_CASE("constant reference makes r2 an explicit error") {
  Volume4D ref = line3({4, 4, 4});
  Volume4D est = line3({1, 2, 3});
  CHECK_THROWS_AS(r_squared(ref, est), Error);
  // rmse stays well defined on the same pair.
  CHECK(rmse(ref, est) > 0.0);
}

TEST_CASE("rmse is symmetric, r2 is not") {
  Volume4D a = line3({1, 2, 3});
  Volume4D b = line3({2, 4, 5});
  CHECK(rmse(a, b) == rmse(b, a));
  CHECK(r_squared(a, b) != r_squared(b, a));
}

TEST_CASE("rmse scales linearly under uniform scaling of both inputs") {
  Volume4D a = line3({1, 2, 3});
  Volume4D b = line3({2, 4, 5});
  CHECK(rmse(scaled(a, 8.0), scaled(b, 8.0)) ==
        doctest::Approx(8.0 * rmse(a, b)).epsilon(1e-12));
}

TEST_CASE("rmse zero exactly when inputs agree on the mask") {
  Volume4D ref({2, 1, 1, 1}, {}, {1.0, 5.0});
  Volume4D est({2, 1, 1, 1}, {}, {1.0, 9.0});
  Mask3D first_only({2, 1, 1}, {1, 0});
  CHECK(rmse(ref, est, &first_only) == 0.0);
  CHECK(rmse(ref, est) > 0.0);
}

TEST_CASE("residual map is the per-voxel squared difference") {
  Volume4D noisy = line3({3, 1, 2});
  Volume4D denoised = line3({1, 1, 2});
  Volume4D map = residual_map(noisy, denoised);
  CHECK(map.at_linear(0, 0) == 4.0);
  CHECK(map.at_linear(1, 0) == 0.0);
  CHECK(map.at_linear(2, 0) == 0.0);

  Volume4D zero = residual_map(noisy, noisy);
  for (double v : zero.data()) CHECK(v == 0.0);
}

TEST_CASE("shape and mask validation") {
  Volume4D a = line3({1, 2, 3});
  Volume4D b({1, 1, 3, 1}, {}, {1, 2, 3});
  CHECK_THROWS_AS(rmse(a, b), Error);
  CHECK_THROWS_AS(r_squared(a, b), Error);
  CHECK_THROWS_AS(residual_map(a, b), Error);

  Mask3D wrong({2, 1, 1}, {1, 1});
  CHECK_THROWS_AS(rmse(a, a, &wrong), Error);

  Mask3D empty({3, 1, 1}, {0, 0, 0});
  CHECK_THROWS_AS(rmse(a, a, &empty), Error);
}

TEST_CASE("evaluate pools volumes and reports per-volume scores") {
  // Two volumes over two voxels; hand arithmetic below.
  Volume4D ref({2, 1, 1, 2}, {}, {1, 3, 10, 14});
  Volume4D est({2, 1, 1, 2}, {}, {1, 5, 10, 14});

  EvalReport rep = evaluate(ref, est, nullptr, true);
  CHECK(rep.voxel_count == 2);
  CHECK(rep.rmse == doctest::Approx(1.0).epsilon(1e-12));  // sqrt(4/4)
  // Pooled mean of ref is 7; SS_tot = 36+16+9+49 = 110, SS_res = 4.
  CHECK(rep.r2 == doctest::Approx(1.0 - 4.0 / 110.0).epsilon(1e-12));

  REQUIRE(rep.per_volume.size() == 2);
  CHECK(rep.per_volume[0].rmse == doctest::Approx(std::sqrt(2.0)));
  CHECK(rep.per_volume[1].rmse == 0.0);
  // Volume 0: mean 2, SS_tot 2, SS_res 4.
  REQUIRE(rep.per_volume[0].r2.has_value());
  CHECK(*rep.per_volume[0].r2 == doctest::Approx(-1.0).epsilon(1e-12));
  REQUIRE(rep.per_volume[1].r2.has_value());
  CHECK(*rep.per_volume[1].r2 == 1.0);
}

TEST_CASE("per-volume r2 is absent when that volume's reference is constant") {
  Volume4D ref({2, 1, 1, 2}, {}, {5, 5, 1, 2});
  Volume4D est({2, 1, 1, 2}, {}, {5, 6, 1, 2});
  EvalReport rep = evaluate(ref, est, nullptr, true);
  REQUIRE(rep.per_volume.size() == 2);
  CHECK_FALSE(rep.per_volume[0].r2.has_value());
  CHECK(rep.per_volume[1].r2.has_value());
  // Pooled reference is not constant, so the pooled r2 still exists.
  CHECK(rep.r2 < 1.0);
}

TEST_CASE("csv record round trips the report fields") {
  Volume4D ref = line3({1, 2, 3});
  Volume4D est = line3({1, 2, 5});
  EvalReport rep = evaluate(ref, est);
  CHECK(csv_header() == "snr,method,rmse,r2,voxel_count");
  const std::string row = csv_record("10", "p2s", rep);
  CHECK(row.rfind("10,p2s,", 0) == 0);
  CHECK(row.find(",3") == row.size() - 2);  // voxel_count last
}

TEST_CASE("mean residual tracks noise power when denoising is near-perfect") {
  PhantomSpec spec = default_phantom_spec(30, 42);
  Volume4D clean = clean_signal(spec);
  Mask3D mask = tissue_mask(spec);
  NoiseSpec noise;
  noise.snr_target = 50.0;
  noise.sigma = resolve_sigma(clean, spec, noise);
  noise.snr_target.reset();
  Volume4D noisy = apply_noise(clean, noise, spec.seed);

  DenoiseConfig cfg;
  cfg.mask = &mask;
  Volume4D denoised = patch2self(noisy, cfg);

  Volume4D res = residual_map(noisy, denoised);
  double sum_res = 0.0, sum_pow = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < clean.dims().n; ++t)
    for (std::size_t v = 0; v < clean.voxels(); ++v) {
      if (!mask.test(v)) continue;
      sum_res += res.at_linear(v, t);
      const double d = noisy.at_linear(v, t) - clean.at_linear(v, t);
      sum_pow += d * d;
      ++count;
    }
  const double ratio = (sum_res / count) / (sum_pow / count);
  CHECK(ratio > 0.8);
  CHECK(ratio < 1.2);
}
