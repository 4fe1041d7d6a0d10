#pragma once

// Dense complex linear algebra helpers shared by every module.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace ntforge {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Structural zero tolerance (Kronecker / block arithmetic noise).
inline constexpr double kZeroTol = 1e-12;
/// Tolerance for norm identities such as the C*-identity.
inline constexpr double kNormTol = 1e-10;
/// Singular value cutoff used for rank and faithfulness decisions.
inline constexpr double kRankTol = 1e-8;

/// a ⊗ I_k with the existing factor on the left (row-major flattening of
/// the product index).
inline Matrix kron_identity(const Matrix& a, Index k) {
  if (k == 1) return a;
  Matrix out = Matrix::Zero(a.rows() * k, a.cols() * k);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) {
      const cplx v = a(i, j);
      if (v == cplx(0.0)) continue;
      for (Index l = 0; l < k; ++l) out(i * k + l, j * k + l) = v;
    }
  return out;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Largest singular value; zero for empty matrices.
inline double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 || a.cols() == 1) return a.norm();
  Eigen::BDCSVD<Matrix> svd(a);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

inline Eigen::VectorXd singular_values(const Matrix& a) {
  if (a.size() == 0) return Eigen::VectorXd();
  Eigen::BDCSVD<Matrix> svd(a);
  return svd.singularValues();
}

inline double smallest_singular_value(const Matrix& a) {
  if (a.cols() == 0) return std::numeric_limits<double>::infinity();
  if (a.rows() < a.cols()) return 0.0;
  const auto s = singular_values(a);
  return s(s.size() - 1);
}

/// Numerical rank with an absolute singular value cutoff.
inline Index numerical_rank(const Matrix& a, double cutoff = kRankTol) {
  if (a.size() == 0) return 0;
  const auto s = singular_values(a);
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++r;
  return r;
}

/// Orthogonal projection onto the column span of `cols` (size n × k).
inline Matrix range_projection(const Matrix& cols, Index n, double cutoff = kRankTol) {
  if (cols.cols() == 0) return Matrix::Zero(n, n);
  Eigen::BDCSVD<Matrix> svd(cols, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++r;
  const Matrix u = svd.matrixU().leftCols(r);
  return u * u.adjoint();
}

/// Largest singular value by power iteration on AᴴA, for matrices too large
/// for a dense SVD. Works with dense or sparse operands. Deterministic start
/// vector.
template <class Mat>
double power_iteration_norm(const Mat& a, double tol = 1e-8, int max_iter = 20000) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> g;
  Vector v(a.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = cplx(g(rng), g(rng));
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = a.adjoint() * (a * v);
    const double lambda = w.norm();
    if (lambda == 0.0) return 0.0;
    w /= lambda;
    const double next = std::sqrt(lambda);
    const bool done = std::abs(next - sigma) <= tol * std::max(1.0, next);
    sigma = next;
    v = w;
    if (done) break;
  }
  return sigma;
}

/// Matrix with i.i.d. standard complex Gaussian entries.
template <class Rng>
Matrix random_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

/// Row-major vectorization, matching the Kronecker convention above.
inline Vector vec(const Matrix& m) {
  Vector v(m.size());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

}  // namespace ntforge
