#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace twrelay {

using Complex = std::complex<double>;

/// Dense complex matrix with entries validated finite on construction.
/// Storage and elementwise kernels are delegated to Eigen; the factorizations
/// exposed below are the only linear algebra the rate formulas need.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(Eigen::Index rows, Eigen::Index cols)
      : m_(Eigen::MatrixXcd::Zero(rows, cols)) {}
  explicit CMatrix(Eigen::MatrixXcd data) : m_(std::move(data)) {
    if (!m_.allFinite()) {
      throw std::invalid_argument("CMatrix: non-finite entry");
    }
  }

  static CMatrix identity(Eigen::Index n) {
    return CMatrix(Eigen::MatrixXcd::Identity(n, n));
  }

  static CMatrix from_rows(
      std::initializer_list<std::initializer_list<Complex>> rows) {
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index c =
        r > 0 ? static_cast<Eigen::Index>(rows.begin()->size()) : 0;
    Eigen::MatrixXcd m(r, c);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Eigen::Index>(row.size()) != c) {
        throw std::invalid_argument("CMatrix::from_rows: ragged rows");
      }
      Eigen::Index j = 0;
      for (const Complex& v : row) m(i, j++) = v;
      ++i;
    }
    return CMatrix(std::move(m));
  }

  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }

  Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  Complex& operator()(Eigen::Index i, Eigen::Index j) { return m_(i, j); }

  const Eigen::MatrixXcd& data() const { return m_; }

 private:
  Eigen::MatrixXcd m_{0, 0};
};

/// Conjugate transpose.
inline CMatrix adjoint(const CMatrix& a) {
  return CMatrix(a.data().adjoint());
}

inline CMatrix matmul(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument(
        "matmul: dimension mismatch (" + std::to_string(a.rows()) + "x" +
        std::to_string(a.cols()) + " times " + std::to_string(b.rows()) + "x" +
        std::to_string(b.cols()) + ")");
  }
  return CMatrix(a.data() * b.data());
}

inline CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  return matmul(a, b);
}

inline CMatrix operator+(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("operator+: dimension mismatch");
  }
  return CMatrix(a.data() + b.data());
}

inline CMatrix operator-(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("operator-: dimension mismatch");
  }
  return CMatrix(a.data() - b.data());
}

inline CMatrix operator*(Complex s, const CMatrix& a) {
  return CMatrix(s * a.data());
}

inline CMatrix operator*(double s, const CMatrix& a) {
  return CMatrix(s * a.data());
}

inline Complex trace(const CMatrix& a) { return a.data().trace(); }

inline double frobenius_norm(const CMatrix& a) { return a.data().norm(); }

inline double max_abs(const CMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  return a.data().cwiseAbs().maxCoeff();
}

/// Hermitian to relative tolerance: max |A - A*| <= tol * max |A|.
inline bool is_hermitian(const CMatrix& a, double rel_tol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  const double scale = max_abs(a);
  const double dev = (a.data() - a.data().adjoint()).cwiseAbs().maxCoeff();
  return dev <= rel_tol * scale;
}

/// (A + A*) / 2; suppresses round-off asymmetry before factorizations.
inline CMatrix hermitian_part(const CMatrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("hermitian_part: matrix must be square");
  }
  return CMatrix(0.5 * (a.data() + a.data().adjoint().eval()));
}

/// Real eigenvalues of a Hermitian matrix, sorted descending.
struct HermitianSpectrum {
  std::vector<double> eigenvalues;

  HermitianSpectrum() = default;
  explicit HermitianSpectrum(std::vector<double> vals)
      : eigenvalues(std::move(vals)) {
    std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<double>());
  }

  std::size_t size() const { return eigenvalues.size(); }
  double operator[](std::size_t l) const { return eigenvalues[l]; }
};

namespace detail {

/// Lower Cholesky factor L with L L* = A for Hermitian positive definite A.
/// A must already be exactly Hermitian (pass the hermitian part). Failure
/// names the pivot index so callers can report which mode broke down.
inline Eigen::MatrixXcd cholesky_lower(const Eigen::MatrixXcd& a,
                                       const char* op) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j).real();
    for (Eigen::Index k = 0; k < j; ++k) d -= std::norm(L(j, k));
    if (!(d > 0.0)) {
      throw std::domain_error(std::string(op) +
                              ": matrix is not positive definite (pivot " +
                              std::to_string(j) + ")");
    }
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      Complex s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * std::conj(L(j, k));
      L(i, j) = s / ljj;
    }
  }
  return L;
}

inline void require_hermitian(const CMatrix& a, const char* op) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument(std::string(op) + ": matrix must be square");
  }
  if (!is_hermitian(a)) {
    throw std::domain_error(std::string(op) + ": matrix is not Hermitian");
  }
}

}  // namespace detail

inline HermitianSpectrum eigvals_hermitian(const CMatrix& a) {
  detail::require_hermitian(a, "eigvals_hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      hermitian_part(a).data(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::domain_error("eigvals_hermitian: eigensolver did not converge");
  }
  const auto& vals = solver.eigenvalues();
  std::vector<double> out(vals.data(), vals.data() + vals.size());
  std::reverse(out.begin(), out.end());  // Eigen returns ascending
  return HermitianSpectrum(std::move(out));
}

/// log2 det(A) for Hermitian positive definite A, via Cholesky.
inline double logdet_hpd(const CMatrix& a) {
  detail::require_hermitian(a, "logdet_hpd");
  const Eigen::MatrixXcd L =
      detail::cholesky_lower(hermitian_part(a).data(), "logdet_hpd");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < L.rows(); ++j) sum += std::log2(L(j, j).real());
  return 2.0 * sum;
}

/// Solve A X = B for Hermitian positive definite A.
inline CMatrix hpd_solve(const CMatrix& a, const CMatrix& b) {
  detail::require_hermitian(a, "hpd_solve");
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("hpd_solve: right-hand side has " +
                                std::to_string(b.rows()) + " rows, expected " +
                                std::to_string(a.rows()));
  }
  const Eigen::MatrixXcd L =
      detail::cholesky_lower(hermitian_part(a).data(), "hpd_solve");
  Eigen::MatrixXcd y = L.triangularView<Eigen::Lower>().solve(b.data());
  Eigen::MatrixXcd x =
      L.adjoint().triangularView<Eigen::Upper>().solve(std::move(y));
  return CMatrix(std::move(x));
}

/// L^{-1} S L^{-*} for the Cholesky factor L L* = A. Congruence by the
/// inverse factor keeps the result Hermitian when S is, unlike A^{-1} S.
inline CMatrix hpd_whiten(const CMatrix& a, const CMatrix& s) {
  detail::require_hermitian(a, "hpd_whiten");
  if (s.rows() != a.rows() || s.cols() != a.cols()) {
    throw std::invalid_argument("hpd_whiten: dimension mismatch");
  }
  const Eigen::MatrixXcd L =
      detail::cholesky_lower(hermitian_part(a).data(), "hpd_whiten");
  Eigen::MatrixXcd y = L.triangularView<Eigen::Lower>().solve(s.data());
  Eigen::MatrixXcd t =
      L.triangularView<Eigen::Lower>().solve(y.adjoint().eval());
  return CMatrix(t.adjoint());
}

}  // namespace twrelay
