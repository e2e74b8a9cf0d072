#ifndef P2S_PHANTOM_HPP
#define P2S_PHANTOM_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "p2s/volume.hpp"

namespace p2s {

// Symmetric 3x3 diffusion tensor in mm^2/s, stored as the six unique
// entries (xx, yy, zz, xy, xz, yz).
struct Tensor3 {
  double xx = 0, yy = 0, zz = 0, xy = 0, xz = 0, yz = 0;

  double quadratic_form(const std::array<double, 3>& g) const {
    return g[0] * g[0] * xx + g[1] * g[1] * yy + g[2] * g[2] * zz +
           2.0 * (g[0] * g[1] * xy + g[0] * g[2] * xz + g[1] * g[2] * yz);
  }
  static Tensor3 isotropic(double d) { return {d, d, d, 0, 0, 0}; }
};

struct TissueLabel {
  std::string name;
  Tensor3 tensor;
  double s0 = 100.0;
};

// Axis-aligned geometric primitive; voxels are tested at their centers in
// index coordinates. Later regions overwrite earlier ones.
struct Region {
  enum class Shape { ellipsoid, box };
  Shape shape = Shape::ellipsoid;
  std::array<double, 3> center{};  // index coordinates
  std::array<double, 3> radii{};   // semi-axes (ellipsoid) or half-extents (box)
  std::size_t label = 0;           // index into PhantomSpec::labels
};

struct GradientEntry {
  double b = 0.0;                    // s/mm^2
  std::array<double, 3> dir{0, 0, 0};  // unit norm when b > 0
};

struct PhantomSpec {
  Dim3 dims{24, 24, 24};
  Spacing spacing{2.0, 2.0, 2.0};
  std::vector<TissueLabel> labels;
  std::vector<Region> regions;
  std::vector<GradientEntry> gradients;
  std::uint64_t seed = 0;
};

struct NoiseSpec {
  unsigned channels = 8;
  double sigma = 0.0;
  std::optional<double> snr_target;  // overrides sigma from mean tissue b0
};

// Per-voxel tissue label map; background (no region) is label `npos`.
struct LabelMap {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  Dim3 dims;
  std::vector<std::size_t> labels;

  bool is_tissue(std::size_t voxel) const { return labels[voxel] != npos; }
};

LabelMap rasterize_regions(const PhantomSpec& spec);

// Noise-free signal: S0 * exp(-b * g^T D g) per tissue voxel and gradient
// table entry; background voxels are zero.
Volume4D clean_signal(const PhantomSpec& spec);

// Tissue mask derived from the rasterized regions (all non-background labels).
Mask3D tissue_mask(const PhantomSpec& spec);

// Mean clean b0 signal over tissue voxels; the SNR reference level.
double mean_tissue_b0(const Volume4D& clean, const PhantomSpec& spec);

// Resolves NoiseSpec::snr_target against the clean data: sigma = mean
// tissue b0 / snr. Returns the explicit sigma otherwise.
double resolve_sigma(const Volume4D& clean, const PhantomSpec& spec,
                     const NoiseSpec& noise);

// Multi-channel complex Gaussian corruption with sum-of-squares coil
// combination. Channel c carries S/sqrt(C) as its real part; N(0, sigma^2)
// is added independently to real and imaginary parts; the output is the
// root sum of squares. Draws are keyed on (voxel, volume, channel), so the
// result is independent of evaluation order. sigma = 0 returns the input
// bitwise. An unresolved snr_target is rejected: call resolve_sigma first.
Volume4D apply_noise(const Volume4D& clean, const NoiseSpec& noise,
                     std::uint64_t seed);

// Evenly distributed unit directions (Fibonacci sphere).
std::vector<std::array<double, 3>> fibonacci_directions(std::size_t count);

// The stock phantom used by the CLI when no spec file is given: a small
// multi-region geometry with anisotropic tensors and a mixed-shell
// gradient table of `volumes` entries (first two are b=0).
PhantomSpec default_phantom_spec(std::size_t volumes, std::uint64_t seed);

// JSON (de)serialization of the spec document; schema in the README.
PhantomSpec load_phantom_spec(const std::string& path);
void save_phantom_spec(const PhantomSpec& spec, const std::string& path);

}  // namespace p2s

#endif
