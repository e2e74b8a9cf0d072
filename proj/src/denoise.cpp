#include "p2s/denoise.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>

#include "p2s/detail/kernels.hpp"

namespace p2s {

namespace {

void check_holdout_args(const PatchFeatures& features, std::size_t j) {
  if (features.n_volumes() < 2)
    throw Error(ErrorCode::too_few_volumes,
                "denoising needs at least 2 volumes");
  if (j >= features.n_volumes())
    throw Error(ErrorCode::index_out_of_bounds, "hold-out volume out of range");
}

}  // namespace

HoldoutSplit build_holdout(const PatchFeatures& features, std::size_t j) {
  check_holdout_args(features, j);
  const std::size_t m = features.rows();
  const std::size_t ps = features.patch_size();
  const std::size_t n = features.n_volumes();
  std::vector<double> storage;
  storage.reserve(m * ps * (n - 1));
  for (std::size_t t = 0; t < n; ++t) {
    if (t == j) continue;
    for (std::size_t o = 0; o < ps; ++o) {
      const auto col = features.column_span(features.column(t, o));
      storage.insert(storage.end(), col.begin(), col.end());
    }
  }
  const auto target_col =
      features.column_span(features.column(j, features.center_offset()));
  return HoldoutSplit{
      j, DesignMatrix(m, ps * (n - 1), std::move(storage), true),
      std::vector<double>(target_col.begin(), target_col.end())};
}

std::vector<double> denoise_volume(const PatchFeatures& features,
                                   std::size_t j, const DenoiseConfig& cfg) {
  HoldoutSplit split = build_holdout(features, j);
  LinearModel model = fit(split.design, split.target, cfg.regularization);
  return predict(model, split.design);
}

Volume4D patch2self(const Volume4D& vol, const DenoiseConfig& cfg) {
  const std::size_t n = vol.dims().n;
  if (n < 2)
    throw Error(ErrorCode::too_few_volumes,
                "denoising needs at least 2 volumes");
  const unsigned threads = cfg.threads == 0 ? 1 : cfg.threads;

  const PatchFeatures features = extract_patches(vol, cfg.radius, cfg.mask);
  const std::size_t m = features.rows();
  const std::size_t ps = features.patch_size();
  const std::size_t total = features.columns();

  // One pass over all feature columns: per-column sums and the full Gram
  // matrix. Every per-hold-out normal-equations system is a slice of these.
  std::vector<double> sums(total);
  std::vector<double> gram(total * total);
  detail::parallel_for(total, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      const auto col_b = features.column_span(b);
      sums[b] = detail::sum(col_b);
      for (std::size_t a = 0; a <= b; ++a) {
        const double g = detail::dot(features.column_span(a), col_b);
        gram[a + total * b] = g;
        gram[b + total * a] = g;
      }
    }
  });

  Volume4D out = Volume4D::zeros(vol.dims(), vol.spacing());
  std::mutex progress_mutex;

  detail::parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    const std::size_t d = ps * (n - 1);
    std::vector<std::size_t> keep(d);
    NormalEquations eq;
    eq.rows = m;
    eq.cols = d;
    eq.has_intercept = true;
    eq.gram.resize(d * d);
    eq.cross.resize(d);
    eq.col_sums.resize(d);

    for (std::size_t j = begin; j < end; ++j) {
      const auto t0 = std::chrono::steady_clock::now();

      std::size_t k = 0;
      for (std::size_t t = 0; t < n; ++t) {
        if (t == j) continue;
        for (std::size_t o = 0; o < ps; ++o) keep[k++] = features.column(t, o);
      }
      const std::size_t target_col = features.column(j, features.center_offset());

      for (std::size_t b = 0; b < d; ++b) {
        const double* g_col = gram.data() + total * keep[b];
        for (std::size_t a = 0; a < d; ++a) eq.gram[a + d * b] = g_col[keep[a]];
      }
      for (std::size_t a = 0; a < d; ++a) {
        eq.cross[a] = gram[keep[a] + total * target_col];
        eq.col_sums[a] = sums[keep[a]];
      }
      eq.sum_y = sums[target_col];

      const LinearModel model = solve_normal_equations(eq, cfg.regularization);

      std::vector<double> pred(m, model.intercept);
      for (std::size_t a = 0; a < d; ++a)
        detail::axpy(model.coefficients[a], features.column_span(keep[a]), pred);

      std::vector<double> slab(vol.voxels(), 0.0);
      if (cfg.mask != nullptr && cfg.passthrough == Passthrough::copy_input) {
        const auto input = vol.volume(j);
        std::copy(input.begin(), input.end(), slab.begin());
      }
      scatter_rows_into(pred, features.voxel_index(), slab);
      out.set_volume(j, slab);

      if (cfg.progress) {
        const std::chrono::duration<double> dt =
            std::chrono::steady_clock::now() - t0;
        std::lock_guard<std::mutex> lock(progress_mutex);
        cfg.progress(j, dt.count());
      }
    }
  });

  return out;
}

}  // namespace p2s
