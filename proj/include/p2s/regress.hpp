#ifndef P2S_REGRESS_HPP
#define P2S_REGRESS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "p2s/error.hpp"

namespace p2s {

enum class RegKind { ols, ridge };

struct Regularization {
  RegKind kind = RegKind::ols;
  double lambda = 0.0;  // must be 0 for ols, >= 0 for ridge

  static Regularization ols() { return {RegKind::ols, 0.0}; }
  static Regularization ridge(double lambda) { return {RegKind::ridge, lambda}; }
};

// Dense column-major design matrix. The intercept is implicit (an all-ones
// column that is never stored); when enabled the fit leaves it unpenalized
// and reports it separately on the model.
class DesignMatrix {
public:
  DesignMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
               bool has_intercept = true);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool has_intercept() const { return has_intercept_; }
  std::span<const double> column(std::size_t c) const {
    return std::span<const double>(values_).subspan(c * rows_, rows_);
  }
  std::span<const double> storage() const { return values_; }

private:
  std::size_t rows_, cols_;
  bool has_intercept_;
  std::vector<double> values_;
};

struct LinearModel {
  std::vector<double> coefficients;  // one per design column
  double intercept = 0.0;
  Regularization regularization;
};

// Moment form of a least-squares problem: Gram matrix, cross moments and
// column sums. fit() reduces a DesignMatrix to this; the denoising pipeline
// builds it directly by slicing a Gram matrix computed once per dataset.
// Both routes use the kernels in detail/kernels.hpp, so they agree bitwise.
struct NormalEquations {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool has_intercept = true;
  std::vector<double> gram;      // cols x cols, column-major, symmetric
  std::vector<double> cross;     // X^T y
  std::vector<double> col_sums;  // per-column sums of X
  double sum_y = 0.0;
};

NormalEquations build_normal_equations(const DesignMatrix& X,
                                       std::span<const double> y);

// Solves for the coefficients described by `eq`:
//   minimize ||X b + intercept*1 - y||^2 (+ lambda*||b||^2 for ridge)
// The intercept, when present, is eliminated by centering and is never
// penalized. Rank-deficient OLS systems get the minimum-norm solution via
// an eigendecomposition of the centered Gram matrix; eigenvalues below
// max(rows, cols) * eps * lambda_max count as zero.
LinearModel solve_normal_equations(const NormalEquations& eq,
                                   const Regularization& reg);

// fit = build + solve. Throws on shape mismatch, non-finite targets,
// zero rows, or invalid regularization.
LinearModel fit(const DesignMatrix& X, std::span<const double> y,
                const Regularization& reg = Regularization::ols());

// X * coefficients + intercept, accumulated column-by-column in a fixed
// order; predicting a contiguous row chunk yields the same bits as the
// corresponding slice of a full prediction.
std::vector<double> predict(const LinearModel& model, const DesignMatrix& X);
void predict_rows(const LinearModel& model, const DesignMatrix& X,
                  std::size_t row_begin, std::size_t row_end,
                  std::span<double> out);

}  // namespace p2s

#endif
