#ifndef P2S_BASELINE_HPP
#define P2S_BASELINE_HPP

#include <cstddef>

#include "p2s/volume.hpp"

namespace p2s {

// Naive comparison baseline for the sweep: the local Casorati matrix
// (window voxels x volumes, clamp-padded window of the given radius) is
// truncated to its leading `rank` principal components and the center
// voxel's profile re-synthesized from them. Purely a second CSV column;
// it makes no claim beyond rank truncation.
Volume4D svd_rank_baseline(const Volume4D& vol, int window_radius,
                           std::size_t rank, const Mask3D* mask = nullptr);

}  // namespace p2s

#endif
