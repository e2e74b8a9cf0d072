#include "p2s/metrics.hpp"

#include <cmath>
#include <sstream>

namespace p2s {

namespace {

void check_pair(const Volume4D& ref, const Volume4D& est, const Mask3D* mask) {
  if (ref.dims() != est.dims())
    throw Error(ErrorCode::bad_dimensions, "volumes to compare have different dims");
  if (mask != nullptr) {
    if (mask->dims() != ref.dims().spatial())
      throw Error(ErrorCode::bad_dimensions, "mask dims do not match the volumes");
    if (mask->count() == 0)
      throw Error(ErrorCode::empty_mask, "mask excludes every voxel");
  }
}

bool included(const Mask3D* mask, std::size_t voxel) {
  return mask == nullptr || mask->test(voxel);
}

double sum_squared_error(const Volume4D& ref, const Volume4D& est,
                         const Mask3D* mask, std::size_t t) {
  double ss = 0.0;
  for (std::size_t v = 0; v < ref.voxels(); ++v)
    if (included(mask, v)) {
      const double d = ref.at_linear(v, t) - est.at_linear(v, t);
      ss += d * d;
    }
  return ss;
}

double mean_ref(const Volume4D& ref, const Mask3D* mask, std::size_t t_begin,
                std::size_t t_end, std::size_t included_voxels) {
  double sum = 0.0;
  for (std::size_t t = t_begin; t < t_end; ++t)
    for (std::size_t v = 0; v < ref.voxels(); ++v)
      if (included(mask, v)) sum += ref.at_linear(v, t);
  return sum / (static_cast<double>(included_voxels) *
                static_cast<double>(t_end - t_begin));
}

double total_sum_squares(const Volume4D& ref, const Mask3D* mask,
                         std::size_t t_begin, std::size_t t_end, double mean) {
  double ss = 0.0;
  for (std::size_t t = t_begin; t < t_end; ++t)
    for (std::size_t v = 0; v < ref.voxels(); ++v)
      if (included(mask, v)) {
        const double d = ref.at_linear(v, t) - mean;
        ss += d * d;
      }
  return ss;
}

}  // namespace

double rmse(const Volume4D& ref, const Volume4D& est, const Mask3D* mask) {
  check_pair(ref, est, mask);
  const std::size_t included_voxels =
      mask == nullptr ? ref.voxels() : mask->count();
  double ss = 0.0;
  for (std::size_t t = 0; t < ref.dims().n; ++t)
    ss += sum_squared_error(ref, est, mask, t);
  return std::sqrt(ss / (static_cast<double>(included_voxels) *
                         static_cast<double>(ref.dims().n)));
}

double r_squared(const Volume4D& ref, const Volume4D& est, const Mask3D* mask) {
  check_pair(ref, est, mask);
  const std::size_t included_voxels =
      mask == nullptr ? ref.voxels() : mask->count();
  const std::size_t n = ref.dims().n;
  const double mean = mean_ref(ref, mask, 0, n, included_voxels);
  const double ss_tot = total_sum_squares(ref, mask, 0, n, mean);
  if (ss_tot == 0.0)
    throw Error(ErrorCode::bad_argument,
                "reference is constant over the evaluated voxels; R^2 undefined");
  double ss_res = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    ss_res += sum_squared_error(ref, est, mask, t);
  return 1.0 - ss_res / ss_tot;
}

Volume4D residual_map(const Volume4D& noisy, const Volume4D& denoised) {
  check_pair(noisy, denoised, nullptr);
  std::vector<double> data(noisy.size());
  const auto a = noisy.data();
  const auto b = denoised.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double d = a[i] - b[i];
    data[i] = d * d;
  }
  return Volume4D(noisy.dims(), noisy.spacing(), std::move(data));
}

EvalReport evaluate(const Volume4D& ref, const Volume4D& est,
                    const Mask3D* mask, bool per_volume) {
  EvalReport report;
  report.rmse = rmse(ref, est, mask);
  report.r2 = r_squared(ref, est, mask);
  report.voxel_count = mask == nullptr ? ref.voxels() : mask->count();
  if (per_volume) {
    const double denom = static_cast<double>(report.voxel_count);
    for (std::size_t t = 0; t < ref.dims().n; ++t) {
      VolumeScore score;
      const double ss_res = sum_squared_error(ref, est, mask, t);
      score.rmse = std::sqrt(ss_res / denom);
      const double mean = mean_ref(ref, mask, t, t + 1, report.voxel_count);
      const double ss_tot = total_sum_squares(ref, mask, t, t + 1, mean);
      if (ss_tot > 0.0) score.r2 = 1.0 - ss_res / ss_tot;
      report.per_volume.push_back(score);
    }
  }
  return report;
}

std::string csv_header() { return "snr,method,rmse,r2,voxel_count"; }

std::string csv_record(std::string_view snr, std::string_view method,
                       const EvalReport& report) {
  std::ostringstream out;
  out.precision(10);
  out << snr << ',' << method << ',' << report.rmse << ',' << report.r2 << ','
      << report.voxel_count;
  return out.str();
}

}  // namespace p2s
