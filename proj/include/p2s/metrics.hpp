#ifndef P2S_METRICS_HPP
#define P2S_METRICS_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "p2s/volume.hpp"

namespace p2s {

struct VolumeScore {
  double rmse = 0.0;
  // Absent when this volume's reference is constant over the evaluated
  // voxels (per-volume R² is undefined there).
  std::optional<double> r2;
};

struct EvalReport {
  double rmse = 0.0;
  double r2 = 0.0;            // pooled over all included voxels and volumes
  std::size_t voxel_count = 0;  // spatial voxels included (per volume)
  std::vector<VolumeScore> per_volume;
};

// sqrt(mean (ref - est)^2) over included voxels x volumes. Symmetric in
// its first two arguments.
double rmse(const Volume4D& ref, const Volume4D& est,
            const Mask3D* mask = nullptr);

// 1 - SS_res/SS_tot with SS_tot about the mean of `ref` over the included
// voxels, pooled across volumes. Not symmetric: `ref` is the ground truth.
// A constant reference is an error.
double r_squared(const Volume4D& ref, const Volume4D& est,
                 const Mask3D* mask = nullptr);

// Per-voxel squared difference, same shape as the inputs.
Volume4D residual_map(const Volume4D& noisy, const Volume4D& denoised);

EvalReport evaluate(const Volume4D& ref, const Volume4D& est,
                    const Mask3D* mask = nullptr, bool per_volume = false);

// Flat record for reports: snr and method are free-text labels.
std::string csv_header();
std::string csv_record(std::string_view snr, std::string_view method,
                       const EvalReport& report);

}  // namespace p2s

#endif
