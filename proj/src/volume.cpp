#include "p2s/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace p2s {

namespace {

void check_finite(std::span<const double> data) {
  for (double v : data) {
    if (!std::isfinite(v))
      throw Error(ErrorCode::non_finite, "volume contains NaN or Inf");
  }
}

}  // namespace

Volume4D::Volume4D(Dim4 dims, Spacing spacing, std::vector<double> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  if (dims_.l == 0 || dims_.w == 0 || dims_.h == 0 || dims_.n == 0)
    throw Error(ErrorCode::bad_dimensions, "volume extents must be positive");
  if (data_.size() != dims_.size())
    throw Error(ErrorCode::bad_dimensions,
                "data length " + std::to_string(data_.size()) +
                    " does not match dims (expected " +
                    std::to_string(dims_.size()) + ")");
  check_finite(data_);
}

Volume4D Volume4D::zeros(Dim4 dims, Spacing spacing) {
  return Volume4D(dims, spacing, std::vector<double>(dims.size(), 0.0));
}

void Volume4D::set_volume(std::size_t t, std::span<const double> values) {
  if (t >= dims_.n)
    throw Error(ErrorCode::index_out_of_bounds, "volume index out of range");
  if (values.size() != dims_.voxels())
    throw Error(ErrorCode::bad_dimensions, "slab size mismatch");
  check_finite(values);
  std::copy(values.begin(), values.end(),
            data_.begin() + static_cast<std::ptrdiff_t>(t * dims_.voxels()));
}

Mask3D::Mask3D(Dim3 dims, std::vector<std::uint8_t> flags)
    : dims_(dims), flags_(std::move(flags)) {
  if (dims_.voxels() == 0)
    throw Error(ErrorCode::bad_dimensions, "mask extents must be positive");
  if (flags_.size() != dims_.voxels())
    throw Error(ErrorCode::bad_dimensions, "mask flag count does not match dims");
  count_ = 0;
  for (auto f : flags_)
    if (f) ++count_;
}

Mask3D Mask3D::from_volume(const Volume4D& vol) {
  auto slab = vol.volume(0);
  std::vector<std::uint8_t> flags(slab.size());
  for (std::size_t i = 0; i < slab.size(); ++i) flags[i] = slab[i] != 0.0;
  return Mask3D(vol.dims().spatial(), std::move(flags));
}

Mask3D Mask3D::full(Dim3 dims) {
  return Mask3D(dims, std::vector<std::uint8_t>(dims.voxels(), 1));
}

PatchFeatures::PatchFeatures(std::size_t rows, int radius,
                             std::size_t n_volumes, VoxelMap map)
    : rows_(rows),
      radius_(radius),
      edge_(2 * static_cast<std::size_t>(radius) + 1),
      patch_size_(edge_ * edge_ * edge_),
      n_volumes_(n_volumes),
      map_(std::move(map)),
      values_(rows * patch_size_ * n_volumes) {}

namespace {

inline std::size_t clamp_add(std::size_t base, int delta, std::size_t limit) {
  // limit >= 1; result is the coordinate-wise clamped index
  long long v = static_cast<long long>(base) + delta;
  if (v < 0) return 0;
  if (v >= static_cast<long long>(limit)) return limit - 1;
  return static_cast<std::size_t>(v);
}

}  // namespace

PatchFeatures extract_patches(const Volume4D& vol, int radius,
                              const Mask3D* mask) {
  if (radius < 0)
    throw Error(ErrorCode::bad_argument, "patch radius must be >= 0");
  const Dim4& d = vol.dims();
  if (mask) {
    if (mask->dims() != d.spatial())
      throw Error(ErrorCode::bad_dimensions,
                  "mask dimensions do not match volume");
    if (mask->count() == 0)
      throw Error(ErrorCode::empty_mask, "mask selects no voxels");
  }

  VoxelMap map;
  map.dims = d.spatial();
  const std::size_t total = d.voxels();
  if (mask) {
    map.linear.reserve(mask->count());
    for (std::size_t v = 0; v < total; ++v)
      if (mask->test(v)) map.linear.push_back(static_cast<std::uint32_t>(v));
  } else {
    map.linear.resize(total);
    for (std::size_t v = 0; v < total; ++v)
      map.linear[v] = static_cast<std::uint32_t>(v);
  }

  const std::size_t rows = map.linear.size();
  PatchFeatures feats(rows, radius, d.n, std::move(map));
  const VoxelMap& vm = feats.voxel_index();

  // Fill column by column: each (volume, offset) pair is a clamped gather
  // over the included voxels, streamed from that volume's slab.
  for (std::size_t t = 0; t < d.n; ++t) {
    auto slab = vol.volume(t);
    std::size_t offset = 0;
    for (int dz = -radius; dz <= radius; ++dz) {
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx, ++offset) {
          auto col = feats.mutable_column(feats.column(t, offset));
          for (std::size_t row = 0; row < rows; ++row) {
            std::size_t x, y, z;
            vm.decode(row, x, y, z);
            const std::size_t sx = clamp_add(x, dx, d.l);
            const std::size_t sy = clamp_add(y, dy, d.w);
            const std::size_t sz = clamp_add(z, dz, d.h);
            col[row] = slab[sx + d.l * (sy + d.w * sz)];
          }
        }
      }
    }
  }
  return feats;
}

std::vector<double> scatter_rows(std::span<const double> values,
                                 const VoxelMap& map, Dim3 dims, double fill) {
  std::vector<double> slab(dims.voxels(), fill);
  scatter_rows_into(values, map, slab);
  return slab;
}

void scatter_rows_into(std::span<const double> values, const VoxelMap& map,
                       std::span<double> slab) {
  if (values.size() != map.rows())
    throw Error(ErrorCode::bad_dimensions,
                "value count does not match row map");
  for (std::size_t row = 0; row < map.rows(); ++row) {
    const std::uint32_t v = map.linear[row];
    if (v >= slab.size())
      throw Error(ErrorCode::index_out_of_bounds,
                  "row map entry outside target slab");
    slab[v] = values[row];
  }
}

std::vector<double> gather_rows(const Volume4D& vol, std::size_t t,
                                const VoxelMap& map) {
  if (t >= vol.dims().n)
    throw Error(ErrorCode::index_out_of_bounds, "volume index out of range");
  auto slab = vol.volume(t);
  std::vector<double> values(map.rows());
  for (std::size_t row = 0; row < map.rows(); ++row) {
    const std::uint32_t v = map.linear[row];
    if (v >= slab.size())
      throw Error(ErrorCode::index_out_of_bounds,
                  "row map entry outside volume");
    values[row] = slab[v];
  }
  return values;
}

}  // namespace p2s
