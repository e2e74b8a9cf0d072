#include "p2s/baseline.hpp"

#include <Eigen/Dense>

#include <algorithm>

namespace p2s {

Volume4D svd_rank_baseline(const Volume4D& vol, int window_radius,
                           std::size_t rank, const Mask3D* mask) {
  if (window_radius < 1)
    throw Error(ErrorCode::bad_argument, "baseline window radius must be >= 1");
  if (rank < 1)
    throw Error(ErrorCode::bad_argument, "baseline rank must be >= 1");
  const std::size_t n = vol.dims().n;
  if (n < 2)
    throw Error(ErrorCode::too_few_volumes, "baseline needs at least 2 volumes");

  // Reuse the patch plumbing: row r of `features` holds the clamp-padded
  // window around voxel r, per volume; that window is the Casorati matrix.
  const PatchFeatures features = extract_patches(vol, window_radius, mask);
  const std::size_t ps = features.patch_size();
  const std::size_t center = features.center_offset();
  const std::size_t k = std::min(rank, std::min(ps, n));

  Volume4D out = Volume4D::zeros(vol.dims(), vol.spacing());
  std::vector<std::vector<double>> slabs(n);
  for (std::size_t t = 0; t < n; ++t) {
    slabs[t].assign(vol.voxels(), 0.0);
    if (mask != nullptr) {
      const auto input = vol.volume(t);
      std::copy(input.begin(), input.end(), slabs[t].begin());
    }
  }

  Eigen::MatrixXd window(ps, n);
  for (std::size_t row = 0; row < features.rows(); ++row) {
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t o = 0; o < ps; ++o)
        window(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(t)) =
            features.value(row, o, t);

    const Eigen::RowVectorXd mean = window.colwise().mean();
    const Eigen::MatrixXd centered = window.rowwise() - mean;
    const Eigen::MatrixXd gram =
        centered.transpose() * centered;  // n x n volume-space covariance
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success)
      throw Error(ErrorCode::numeric_failure,
                  "eigendecomposition failed in the rank baseline");

    // Top-k eigenvectors (eigenvalues come back ascending).
    const Eigen::MatrixXd basis =
        es.eigenvectors().rightCols(static_cast<Eigen::Index>(k));
    const Eigen::RowVectorXd profile =
        centered.row(static_cast<Eigen::Index>(center));
    const Eigen::RowVectorXd reduced = (profile * basis) * basis.transpose();

    const std::size_t voxel = features.voxel_index().linear[row];
    for (std::size_t t = 0; t < n; ++t)
      slabs[t][voxel] = reduced(static_cast<Eigen::Index>(t)) +
                        mean(static_cast<Eigen::Index>(t));
  }

  for (std::size_t t = 0; t < n; ++t) out.set_volume(t, slabs[t]);
  return out;
}

}  // namespace p2s
