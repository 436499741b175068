#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include "dpc/errors.hpp"
#include "dpc/numerics.hpp"
#include "dpc/random.hpp"

using namespace dpc;
using Catch::Matchers::WithinAbs;

namespace {

CMatrix random_matrix(int rows, int cols, RandomStream& rng) {
  CMatrix a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = Complex(rng.normal(), rng.normal());
  return a;
}

CMatrix random_pd(int n, RandomStream& rng) {
  const CMatrix a = random_matrix(n, n, rng);
  return a * a.adjoint() + CMatrix::Identity(n, n);
}

// Independent oracle: sum of log singular values.
double logabsdet_svd(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues().array().log().sum();
}

}  // namespace

TEST_CASE("logdet of identity and diagonal matrices") {
  CHECK_THAT(logdet(CMatrix::Identity(4, 4)), WithinAbs(0.0, 1e-15));
  CMatrix d = CMatrix::Zero(3, 3);
  d.diagonal() << 2.0, 3.0, 0.5;
  CHECK_THAT(logdet(d), WithinAbs(std::log(3.0), 1e-14));
}

TEST_CASE("logdet agrees with the singular-value oracle") {
  RandomStream rng(7);
  for (int n = 1; n <= 6; ++n) {
    const CMatrix a = random_matrix(n, n, rng);
    CHECK_THAT(logdet(a), WithinAbs(logabsdet_svd(a), 1e-10));
  }
}

TEST_CASE("logdet product and commutation identities") {
  RandomStream rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix a = random_matrix(4, 4, rng);
    const CMatrix b = random_matrix(4, 4, rng);
    CHECK_THAT(logdet(a * b), WithinAbs(logdet(a) + logdet(b), 1e-9));
    const CMatrix x = random_matrix(3, 2, rng);
    const CMatrix y = random_matrix(2, 3, rng);
    CHECK_THAT(logdet(CMatrix::Identity(3, 3) + x * y), WithinAbs(logdet(CMatrix::Identity(2, 2) + y * x), 1e-9));
  }
}

TEST_CASE("logdet Schur complement identity on a Hermitian block matrix") {
  RandomStream rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix m = random_pd(5, rng);
    const CMatrix a = m.topLeftCorner(2, 2);
    const CMatrix b = m.topRightCorner(2, 3);
    const CMatrix d = m.bottomRightCorner(3, 3);
    const CMatrix schur = a - b * inverse(d) * b.adjoint();
    CHECK_THAT(logdet(m), WithinAbs(logdet(d) + logdet(schur), 1e-9));
  }
}

TEST_CASE("logdet and inverse reject singular matrices") {
  CMatrix s(2, 2);
  s << 1.0, 2.0, 2.0, 4.0;
  CHECK_THROWS_AS(logdet(s), SingularMatrix);
  CHECK_THROWS_AS(inverse(s), SingularMatrix);
  CHECK_THROWS_AS(logdet(CMatrix::Zero(3, 3)), SingularMatrix);
}

TEST_CASE("inverse times matrix is the identity") {
  RandomStream rng(17);
  const CMatrix a = random_matrix(5, 5, rng);
  CHECK(max_abs(inverse(a) * a - CMatrix::Identity(5, 5)) < 1e-10);
}

TEST_CASE("psd_spectral reconstructs the matrix with descending eigenvalues") {
  RandomStream rng(19);
  const CMatrix a = random_pd(4, rng) - CMatrix::Identity(4, 4);
  const Spectrum sp = psd_spectral(PsdMatrix(a));
  REQUIRE(sp.eigenvalues.size() == 4);
  for (std::size_t i = 1; i < sp.eigenvalues.size(); ++i) CHECK(sp.eigenvalues[i - 1] >= sp.eigenvalues[i]);
  Eigen::VectorXd lam(4);
  for (int i = 0; i < 4; ++i) lam(i) = sp.eigenvalues[static_cast<std::size_t>(i)];
  const CMatrix back = sp.eigenvectors * lam.cast<Complex>().asDiagonal() * sp.eigenvectors.adjoint();
  CHECK(max_abs(back - a) < 1e-10);
}

TEST_CASE("psd_spectral rejects non-Hermitian and indefinite input") {
  CMatrix a(2, 2);
  a << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS_AS(psd_spectral(a), NotHermitian);
  CMatrix b(2, 2);
  b << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(psd_spectral(b), std::invalid_argument);
  CHECK_THROWS(PsdMatrix(b));
}

TEST_CASE("range_basis of a rank-one matrix") {
  CVector v(3);
  v << 1.0, Complex(0.0, 1.0), 2.0;
  const CMatrix a = v * v.adjoint();
  const CMatrix u = range_basis(psd_spectral(a));
  REQUIRE(u.cols() == 1);
  CHECK(max_abs(u * u.adjoint() * v - v) < 1e-12);
}

TEST_CASE("tiny negative eigenvalues are clamped") {
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -1e-13;
  const Spectrum sp = psd_spectral(a);
  CHECK(sp.eigenvalues[1] == 0.0);
}

TEST_CASE("random substreams are reproducible and distinct") {
  const RandomStream root(123);
  RandomStream a = root.substream(5);
  RandomStream b = root.substream(5);
  RandomStream c = root.substream(6);
  for (int i = 0; i < 10; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    CHECK(x != c.normal());
  }
  RandomStream u(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK((v > 0.0 && v < 1.0));
  }
}
