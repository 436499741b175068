#pragma once

// Dense complex-matrix kernel shared by every other module.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace dpc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Pivot magnitude below kSingularThreshold * (max row norm) is reported as SingularMatrix.
inline constexpr double kSingularThreshold = 1e-12;

/// Negative eigenvalues of a PSD input down to -kEigenFloor * max(1, ||A||) are clamped to 0.
inline constexpr double kEigenFloor = 1e-10;

/// Hermitian positive semidefinite matrix. Construction validates both properties.
class PsdMatrix {
 public:
  PsdMatrix() = default;
  explicit PsdMatrix(CMatrix base, double tolerance = 1e-10);

  static PsdMatrix scaled_identity(Eigen::Index n, double scale);
  static PsdMatrix zero(Eigen::Index n);

  const CMatrix& matrix() const { return base_; }
  Eigen::Index size() const { return base_.rows(); }
  double tolerance() const { return tolerance_; }
  double trace() const { return base_.trace().real(); }

 private:
  CMatrix base_;
  double tolerance_ = 1e-10;
};

struct Spectrum {
  std::vector<double> eigenvalues;  // descending, clamped at 0
  CMatrix eigenvectors;             // unitary, column i pairs with eigenvalues[i]
};

/// log|det A| in nats via partially pivoted LU.
double logdet(const CMatrix& a);

CMatrix inverse(const CMatrix& a);

Spectrum psd_spectral(const PsdMatrix& a);
Spectrum psd_spectral(const CMatrix& a, double tolerance = 1e-10);

/// Columns of the eigenbasis spanning eigenvalues above rel_tol * lambda_max.
CMatrix range_basis(const Spectrum& spectrum, double rel_tol = 1e-12);

double hermitian_defect(const CMatrix& a);
double max_abs(const CMatrix& a);
bool is_real(const CMatrix& a, double tolerance = 0.0);

}  // namespace dpc
