#ifndef P2S_VOLUME_HPP
#define P2S_VOLUME_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "p2s/error.hpp"

namespace p2s {

// Index conventions used throughout:
//   * spatial dims are (l, w, h) along (x, y, z), volumes indexed by t
//   * linear voxel index = x + l*(y + w*z)  -- x fastest
//   * 4D storage order: voxel index fastest, volume slowest, so volume t
//     occupies the contiguous slab [t*voxels, (t+1)*voxels)
// Row maps produced by extract_patches refer to linear voxel indices under
// this convention, so they are portable across implementations.

struct Dim3 {
  std::size_t l = 0, w = 0, h = 0;
  std::size_t voxels() const { return l * w * h; }
  bool operator==(const Dim3&) const = default;
};

struct Dim4 {
  std::size_t l = 0, w = 0, h = 0, n = 0;
  Dim3 spatial() const { return {l, w, h}; }
  std::size_t voxels() const { return l * w * h; }
  std::size_t size() const { return l * w * h * n; }
  bool operator==(const Dim4&) const = default;
};

struct Spacing {
  double dx = 1.0, dy = 1.0, dz = 1.0;  // millimetres; metadata only
  bool operator==(const Spacing&) const = default;
};

class Volume4D {
public:
  // Takes ownership of data; throws on size mismatch, zero extents, or
  // non-finite values. n = 1 is allowed so that plain 3D images (masks,
  // single volumes) can be represented; denoising entry points enforce
  // their own n >= 2 requirement.
  Volume4D(Dim4 dims, Spacing spacing, std::vector<double> data);

  static Volume4D zeros(Dim4 dims, Spacing spacing = {});

  const Dim4& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::size_t voxels() const { return dims_.voxels(); }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t x, std::size_t y, std::size_t z,
                    std::size_t t) const {
    return data_[linear(x, y, z) + t * dims_.voxels()];
  }
  double at_linear(std::size_t voxel, std::size_t t) const {
    return data_[voxel + t * dims_.voxels()];
  }
  std::size_t linear(std::size_t x, std::size_t y, std::size_t z) const {
    return x + dims_.l * (y + dims_.w * z);
  }

  std::span<const double> data() const { return data_; }
  std::span<const double> volume(std::size_t t) const {
    return std::span<const double>(data_).subspan(t * dims_.voxels(),
                                                  dims_.voxels());
  }

  // Mutation is limited to whole-slab replacement so the finiteness
  // invariant stays cheap to maintain.
  void set_volume(std::size_t t, std::span<const double> values);

private:
  Dim4 dims_;
  Spacing spacing_;
  std::vector<double> data_;
};

class Mask3D {
public:
  Mask3D(Dim3 dims, std::vector<std::uint8_t> flags);

  // Nonzero voxels of volume 0 become true.
  static Mask3D from_volume(const Volume4D& vol);
  static Mask3D full(Dim3 dims);

  const Dim3& dims() const { return dims_; }
  bool test(std::size_t voxel) const { return flags_[voxel] != 0; }
  std::size_t count() const { return count_; }
  std::span<const std::uint8_t> flags() const { return flags_; }

private:
  Dim3 dims_;
  std::vector<std::uint8_t> flags_;
  std::size_t count_;
};

// Row -> voxel bijection for a set of included voxels.
struct VoxelMap {
  Dim3 dims;
  std::vector<std::uint32_t> linear;  // linear voxel index per row

  std::size_t rows() const { return linear.size(); }
  void decode(std::size_t row, std::size_t& x, std::size_t& y,
              std::size_t& z) const {
    std::uint32_t v = linear[row];
    x = v % dims.l;
    y = (v / dims.l) % dims.w;
    z = v / (dims.l * dims.w);
  }
};

// Flattened cubic neighbourhoods of every included voxel across all volumes.
//
// Patch radius r gives an edge of 2r+1 (radius 0 = the voxel itself).
// Offsets (dx,dy,dz) in [-r,r]^3 flatten x fastest:
//   offset_index = (dz+r)*edge^2 + (dy+r)*edge + (dx+r)
// so the centre sits at offset (edge^3 - 1)/2. Values are stored as an
// m x (patch_size * n) column-major matrix with column(vol, offset) =
// vol*patch_size + offset; this doubles as the feature matrix for the
// regression stage.
class PatchFeatures {
public:
  PatchFeatures(std::size_t rows, int radius, std::size_t n_volumes,
                VoxelMap map);

  std::size_t rows() const { return rows_; }
  int radius() const { return radius_; }
  std::size_t edge() const { return edge_; }
  std::size_t patch_size() const { return patch_size_; }
  std::size_t n_volumes() const { return n_volumes_; }
  std::size_t center_offset() const { return (patch_size_ - 1) / 2; }
  std::size_t columns() const { return patch_size_ * n_volumes_; }
  const VoxelMap& voxel_index() const { return map_; }

  std::size_t column(std::size_t vol, std::size_t offset) const {
    return vol * patch_size_ + offset;
  }
  double value(std::size_t row, std::size_t offset, std::size_t vol) const {
    return values_[column(vol, offset) * rows_ + row];
  }
  std::span<const double> column_span(std::size_t col) const {
    return std::span<const double>(values_).subspan(col * rows_, rows_);
  }
  std::span<double> mutable_column(std::size_t col) {
    return std::span<double>(values_).subspan(col * rows_, rows_);
  }
  std::span<const double> storage() const { return values_; }

private:
  std::size_t rows_;
  int radius_;
  std::size_t edge_;
  std::size_t patch_size_;
  std::size_t n_volumes_;
  VoxelMap map_;
  std::vector<double> values_;
};

// Gathers the clamped-boundary neighbourhood of every included voxel.
// Out-of-bounds neighbours replicate the nearest edge voxel, so boundary
// voxels still produce full patches and the row count never shrinks.
PatchFeatures extract_patches(const Volume4D& vol, int radius,
                              const Mask3D* mask = nullptr);

// Writes values[row] at map positions; everything else takes `fill`.
std::vector<double> scatter_rows(std::span<const double> values,
                                 const VoxelMap& map, Dim3 dims, double fill);

// In-place variant used when the background should keep existing content.
void scatter_rows_into(std::span<const double> values, const VoxelMap& map,
                       std::span<double> slab);

// Inverse of scatter over the mapped entries: values[row] = vol(map[row], t).
std::vector<double> gather_rows(const Volume4D& vol, std::size_t t,
                                const VoxelMap& map);

}  // namespace p2s

#endif
