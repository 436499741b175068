#include "dpc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dpc/errors.hpp"

namespace dpc {

namespace {

void require_square(const CMatrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DimensionMismatch(std::string(what) + ": matrix must be square and non-empty, got " +
                            std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

double max_row_norm(const CMatrix& a) {
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

Eigen::PartialPivLU<CMatrix> checked_lu(const CMatrix& a, const char* what) {
  require_square(a, what);
  Eigen::PartialPivLU<CMatrix> lu(a);
  const double scale = max_row_norm(a);
  const double floor = kSingularThreshold * scale;
  const auto diag = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(std::abs(diag(i)) >= floor) || scale == 0.0) {
      throw SingularMatrix(std::string(what) + ": pivot " + std::to_string(std::abs(diag(i))) +
                           " below threshold " + std::to_string(floor));
    }
  }
  return lu;
}

}  // namespace

PsdMatrix::PsdMatrix(CMatrix base, double tolerance) : base_(std::move(base)), tolerance_(tolerance) {
  require_square(base_, "PsdMatrix");
  // psd_spectral performs the Hermitian and eigenvalue-floor validation.
  (void)psd_spectral(base_, tolerance_);
}

PsdMatrix PsdMatrix::scaled_identity(Eigen::Index n, double scale) {
  return PsdMatrix(CMatrix::Identity(n, n) * scale);
}

PsdMatrix PsdMatrix::zero(Eigen::Index n) { return PsdMatrix(CMatrix::Zero(n, n)); }

double logdet(const CMatrix& a) {
  const auto lu = checked_lu(a, "logdet");
  double acc = 0.0;
  const auto diag = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) acc += std::log(std::abs(diag(i)));
  return acc;
}

CMatrix inverse(const CMatrix& a) { return checked_lu(a, "inverse").inverse(); }

Spectrum psd_spectral(const PsdMatrix& a) { return psd_spectral(a.matrix(), a.tolerance()); }

Spectrum psd_spectral(const CMatrix& a, double tolerance) {
  require_square(a, "psd_spectral");
  const double scale = std::max(1.0, max_abs(a));
  if (hermitian_defect(a) > tolerance * scale) {
    throw NotHermitian("psd_spectral: asymmetry " + std::to_string(hermitian_defect(a)) +
                       " exceeds tolerance");
  }
  const CMatrix sym = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym);
  const auto& values = solver.eigenvalues();  // ascending
  const Eigen::Index n = values.size();

  Spectrum out;
  out.eigenvalues.resize(static_cast<std::size_t>(n));
  out.eigenvectors.resize(n, n);
  const double floor = kEigenFloor * std::max(1.0, std::abs(values(n - 1)));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = n - 1 - i;
    double lambda = values(src);
    if (lambda < 0.0) {
      if (-lambda > floor) {
        throw std::invalid_argument("psd_spectral: eigenvalue " + std::to_string(lambda) +
                                    " is negative beyond the clamping floor");
      }
      lambda = 0.0;
    }
    out.eigenvalues[static_cast<std::size_t>(i)] = lambda;
    out.eigenvectors.col(i) = solver.eigenvectors().col(src);
  }
  return out;
}

CMatrix range_basis(const Spectrum& spectrum, double rel_tol) {
  const double top = spectrum.eigenvalues.empty() ? 0.0 : spectrum.eigenvalues.front();
  Eigen::Index keep = 0;
  for (double lambda : spectrum.eigenvalues) {
    if (top > 0.0 && lambda > rel_tol * top) ++keep;
  }
  return spectrum.eigenvectors.leftCols(keep);
}

double hermitian_defect(const CMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  if (a.size() == 0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double max_abs(const CMatrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

bool is_real(const CMatrix& a, double tolerance) {
  return a.size() == 0 || a.imag().cwiseAbs().maxCoeff() <= tolerance;
}

}  // namespace dpc
