#ifndef P2S_DENOISE_HPP
#define P2S_DENOISE_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "p2s/regress.hpp"
#include "p2s/volume.hpp"

namespace p2s {

enum class Passthrough { copy_input, zero };

struct DenoiseConfig {
  int radius = 0;
  Regularization regularization = Regularization::ols();
  const Mask3D* mask = nullptr;  // nullptr trains on every voxel
  Passthrough passthrough = Passthrough::copy_input;
  unsigned threads = 1;
  // Invoked once per completed volume (from worker threads, serialized).
  std::function<void(std::size_t volume, double seconds)> progress;
};

// Design and target for one held-out volume j. Design columns are ordered
// volume-major: volumes ascending with j skipped, patch offsets in raster
// order within each volume, so column (q, o) sits at q*patch_size + o.
struct HoldoutSplit {
  std::size_t held_out;
  DesignMatrix design;  // m x patch_size*(n-1), intercept on
  std::vector<double> target;
};

HoldoutSplit build_holdout(const PatchFeatures& features, std::size_t j);

// fit + predict on the hold-out split: the self-supervised reconstruction
// of volume j's center voxels. Only cfg.regularization is consulted here;
// radius and mask are already baked into `features`.
std::vector<double> denoise_volume(const PatchFeatures& features,
                                   std::size_t j, const DenoiseConfig& cfg);

// Full pipeline: extract patches once, hold out and reconstruct every
// volume, reassemble. Computes the feature Gram matrix once and slices the
// per-hold-out normal equations out of it; the kernels match the
// materialized denoise_volume path bit for bit.
Volume4D patch2self(const Volume4D& vol, const DenoiseConfig& cfg);

}  // namespace p2s

#endif
