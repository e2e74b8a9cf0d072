#include "p2s/regress.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "p2s/detail/kernels.hpp"

namespace p2s {

namespace {

void check_regularization(const Regularization& reg) {
  if (reg.lambda < 0.0 || !std::isfinite(reg.lambda))
    throw Error(ErrorCode::bad_argument, "regularization lambda must be finite and >= 0");
  if (reg.kind == RegKind::ols && reg.lambda != 0.0)
    throw Error(ErrorCode::bad_argument, "OLS does not take a lambda");
}

// Minimum-norm solve of G b = c for symmetric PSD G. Tries LDLT first and
// accepts it only when the pivots say G is comfortably full rank; otherwise
// falls back to an eigendecomposition with small eigenvalues zeroed out.
Eigen::VectorXd solve_psd(const Eigen::MatrixXd& G, const Eigen::VectorXd& c,
                          std::size_t rows) {
  const std::size_t cols = static_cast<std::size_t>(G.rows());
  const double eps = std::numeric_limits<double>::epsilon();
  const double dim_factor = static_cast<double>(std::max(rows, cols));

  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  if (ldlt.info() == Eigen::Success) {
    const auto& d = ldlt.vectorD();
    const double max_piv = d.maxCoeff();
    const double min_piv = d.minCoeff();
    if (max_piv > 0.0 && min_piv > dim_factor * eps * max_piv)
      return ldlt.solve(c);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::numeric_failure, "eigendecomposition of Gram matrix failed");
  const Eigen::VectorXd& evals = es.eigenvalues();
  const double lambda_max = std::max(evals.maxCoeff(), 0.0);
  const double cutoff = dim_factor * eps * lambda_max;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(evals.size());
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    if (evals[i] > cutoff) inv[i] = 1.0 / evals[i];
  return es.eigenvectors() * (inv.asDiagonal() * (es.eigenvectors().transpose() * c));
}

}  // namespace

DesignMatrix::DesignMatrix(std::size_t rows, std::size_t cols,
                           std::vector<double> values, bool has_intercept)
    : rows_(rows), cols_(cols), has_intercept_(has_intercept), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_)
    throw Error(ErrorCode::bad_dimensions, "design matrix storage does not match rows*cols");
  for (double v : values_)
    if (!std::isfinite(v))
      throw Error(ErrorCode::non_finite, "design matrix contains a non-finite value");
}

NormalEquations build_normal_equations(const DesignMatrix& X,
                                       std::span<const double> y) {
  if (X.rows() == 0)
    throw Error(ErrorCode::bad_argument, "cannot fit on zero rows");
  if (y.size() != X.rows())
    throw Error(ErrorCode::bad_dimensions, "target length does not match design rows");
  for (double v : y)
    if (!std::isfinite(v))
      throw Error(ErrorCode::non_finite, "target contains a non-finite value");

  const std::size_t d = X.cols();
  NormalEquations eq;
  eq.rows = X.rows();
  eq.cols = d;
  eq.has_intercept = X.has_intercept();
  eq.gram.assign(d * d, 0.0);
  eq.cross.resize(d);
  eq.col_sums.resize(d);
  eq.sum_y = detail::sum(y);
  for (std::size_t a = 0; a < d; ++a) {
    const auto col_a = X.column(a);
    eq.col_sums[a] = detail::sum(col_a);
    eq.cross[a] = detail::dot(col_a, y);
    for (std::size_t b = a; b < d; ++b) {
      const double g = detail::dot(col_a, X.column(b));
      eq.gram[a + d * b] = g;
      eq.gram[b + d * a] = g;
    }
  }
  return eq;
}

LinearModel solve_normal_equations(const NormalEquations& eq,
                                   const Regularization& reg) {
  check_regularization(reg);
  if (eq.rows == 0)
    throw Error(ErrorCode::bad_argument, "cannot fit on zero rows");
  const std::size_t d = eq.cols;

  LinearModel model;
  // Ridge with lambda 0 is plain OLS; normalize so the model invariant
  // (lambda = 0 exactly for OLS) holds regardless of how it was requested.
  model.regularization =
      reg.lambda == 0.0 ? Regularization::ols() : reg;

  if (d == 0) {
    model.intercept = eq.has_intercept
                          ? eq.sum_y / static_cast<double>(eq.rows)
                          : 0.0;
    return model;
  }

  const double inv_rows = 1.0 / static_cast<double>(eq.rows);
  Eigen::MatrixXd G(d, d);
  Eigen::VectorXd c(d);
  if (eq.has_intercept) {
    for (std::size_t b = 0; b < d; ++b)
      for (std::size_t a = 0; a < d; ++a)
        G(a, b) = detail::centered_gram_entry(eq.gram[a + d * b], eq.col_sums[a],
                                              eq.col_sums[b], inv_rows);
    for (std::size_t a = 0; a < d; ++a)
      c[a] = detail::centered_gram_entry(eq.cross[a], eq.col_sums[a], eq.sum_y,
                                         inv_rows);
  } else {
    for (std::size_t b = 0; b < d; ++b)
      for (std::size_t a = 0; a < d; ++a) G(a, b) = eq.gram[a + d * b];
    for (std::size_t a = 0; a < d; ++a) c[a] = eq.cross[a];
  }
  if (model.regularization.lambda > 0.0)
    G.diagonal().array() += model.regularization.lambda;

  const Eigen::VectorXd beta = solve_psd(G, c, eq.rows);
  model.coefficients.assign(beta.data(), beta.data() + d);

  if (eq.has_intercept) {
    double dot_means = 0.0;
    for (std::size_t a = 0; a < d; ++a)
      dot_means += eq.col_sums[a] * model.coefficients[a];
    model.intercept = (eq.sum_y - dot_means) * inv_rows;
  }
  return model;
}

LinearModel fit(const DesignMatrix& X, std::span<const double> y,
                const Regularization& reg) {
  return solve_normal_equations(build_normal_equations(X, y), reg);
}

void predict_rows(const LinearModel& model, const DesignMatrix& X,
                  std::size_t row_begin, std::size_t row_end,
                  std::span<double> out) {
  if (model.coefficients.size() != X.cols())
    throw Error(ErrorCode::bad_dimensions, "coefficient count does not match design columns");
  if (row_begin > row_end || row_end > X.rows())
    throw Error(ErrorCode::index_out_of_bounds, "prediction row range out of bounds");
  const std::size_t len = row_end - row_begin;
  if (out.size() != len)
    throw Error(ErrorCode::bad_dimensions, "prediction output length does not match row range");
  for (std::size_t i = 0; i < len; ++i) out[i] = model.intercept;
  for (std::size_t c = 0; c < X.cols(); ++c)
    detail::axpy(model.coefficients[c], X.column(c).subspan(row_begin, len), out);
}

std::vector<double> predict(const LinearModel& model, const DesignMatrix& X) {
  std::vector<double> out(X.rows());
  predict_rows(model, X, 0, X.rows(), out);
  return out;
}

}  // namespace p2s
