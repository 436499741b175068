#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "dpc/errors.hpp"
#include "dpc/rate.hpp"
#include "dpc/solvers.hpp"

using namespace dpc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CMatrix random_matrix(int rows, int cols, RandomStream& rng) {
  CMatrix a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = Complex(rng.normal(), rng.normal());
  return a;
}

}  // namespace

TEST_CASE("single-antenna determinant of M") {
  const double p = 3.0, q = 2.0, n = 0.5;
  const auto cfg = ChannelConfig::scaled_identity(1, 1, p, q, n);
  for (Complex h : {Complex(1.3, 0.0), Complex(-0.4, 0.7)}) {
    for (Complex w : {Complex(0.0, 0.0), Complex(0.6, 0.0), Complex(1.0, 0.0), Complex(0.2, -0.3)}) {
      const auto m = assemble_m(cfg, InflationFactor::scalar(w), CMatrix::Constant(1, 1, h));
      const double expected = std::norm(h) * p * q * std::norm(1.0 - w) + std::norm(w) * q * n + p * n;
      CHECK_THAT(m.full.determinant().real(), WithinRel(expected, 1e-12));
      CHECK(hermitian_defect(m.full) < 1e-14);
    }
  }
}

TEST_CASE("zero inflation gives the interference-as-noise rate") {
  const auto cfg = ChannelConfig::scaled_identity(1, 1, 10, 4, 1);
  const CMatrix h = CMatrix::Constant(1, 1, 0.8);
  const double expected = std::log(1.0 + 0.64 * 10 / (0.64 * 4 + 1));
  CHECK_THAT(rate_integrand(cfg, InflationFactor::zero(1), h), WithinAbs(expected, 1e-12));
}

TEST_CASE("W = I makes log|M| independent of H") {
  RandomStream rng(3);
  const auto cfg = ChannelConfig::scaled_identity(3, 2, 10, 7, 1.5, ComplexGaussian{});
  const double expected = logdet(cfg.sigma_x.matrix() + cfg.sigma_s.matrix()) + logdet(cfg.sigma_z.matrix());
  for (int i = 0; i < 50; ++i) {
    const auto m = assemble_m(cfg, InflationFactor::identity(3), sample_fading(cfg, rng));
    CHECK_THAT(logdet(m.full), WithinAbs(expected, 1e-9));
  }
}

TEST_CASE("rate never exceeds the interference-free rate for a fixed channel") {
  RandomStream rng(21);
  const auto cfg = ChannelConfig::scaled_identity(2, 3, 5, 8, 1, ComplexGaussian{});
  for (int i = 0; i < 200; ++i) {
    const CMatrix h = sample_fading(cfg, rng);
    const InflationFactor w{random_matrix(2, 2, rng)};
    CHECK(rate_integrand(cfg, w, h) <= bound_integrand(cfg, h) + 1e-9);
  }
}

TEST_CASE("the perfect-CSIT inflation factor attains the interference-free rate") {
  RandomStream rng(22);
  const auto cfg = ChannelConfig::scaled_identity(3, 2, 20, 20, 1, ComplexGaussian{});
  for (int i = 0; i < 20; ++i) {
    const CMatrix h = sample_fading(cfg, rng);
    const auto w = perfect_csit_w(cfg, h);
    CHECK_THAT(rate_integrand(cfg, w, h), WithinAbs(bound_integrand(cfg, h), 1e-9));
  }
}

TEST_CASE("row partition reorders M around row k") {
  RandomStream rng(4);
  const auto cfg = ChannelConfig::scaled_identity(3, 2, 3, 3, 1, ComplexGaussian{});
  const auto m = assemble_m(cfg, InflationFactor{random_matrix(3, 3, rng)}, sample_fading(cfg, rng));
  const auto part = m.partition_for_row(1);
  CHECK(part.order == std::vector<Eigen::Index>{1, 0, 2, 3, 4});
  CHECK(part.a == m.full(1, 1));
  CHECK(part.b(0) == m.full(0, 1));
  CHECK(part.d(1, 2) == m.full(2, 3));
  const Complex schur = part.a - (part.b.adjoint() * inverse(part.d) * part.b)(0, 0);
  CHECK_THAT(logdet(m.full), WithinAbs(logdet(part.d) + std::log(std::abs(schur)), 1e-9));
  CHECK_THROWS_AS(m.partition_for_row(3), DimensionMismatch);
}

TEST_CASE("dimension checks") {
  const auto cfg = ChannelConfig::scaled_identity(2, 2, 1, 1, 1);
  CHECK_THROWS_AS(assemble_m(cfg, InflationFactor::identity(3), CMatrix::Identity(2, 2)), DimensionMismatch);
  CHECK_THROWS_AS(assemble_m(cfg, InflationFactor::identity(2), CMatrix::Identity(3, 2)), DimensionMismatch);
}

TEST_CASE("no interference means the rate equals the bound") {
  const auto cfg = ChannelConfig::scaled_identity(2, 2, 10, 0, 1);
  MonteCarloConfig mc{50, 20, 1, 1};
  const auto g = delta_r(cfg, NoCsit{}, constant_policy(InflationFactor::zero(2)), mc);
  CHECK_THAT(g.delta, WithinAbs(0.0, 1e-12));
}

TEST_CASE("Costa: point-mass channel with the perfect inflation factor loses nothing") {
  const double p = 10.0, n = 1.0;
  const auto cfg = ChannelConfig::scaled_identity(1, 1, p, 5, n, PointMass{CMatrix::Identity(1, 1)});
  MonteCarloConfig mc{4, 4, 9, 1};
  const auto g = delta_r(cfg, PerfectCsit{}, constant_policy(InflationFactor::scalar(p / (p + n))), mc);
  CHECK_THAT(g.rate.rate, WithinAbs(std::log2(1.0 + p / n), 1e-12));
  CHECK_THAT(g.delta, WithinAbs(0.0, 1e-12));
}

TEST_CASE("real signalling halves the rate") {
  auto cfg = ChannelConfig::scaled_identity(2, 2, 10, 10, 1);
  MonteCarloConfig mc{40, 10, 3, 1};
  const auto full = achievable_rate(cfg, NoCsit{}, constant_policy(InflationFactor::identity(2)), mc);
  cfg.signal = SignalDomain::Real;
  const auto half = achievable_rate(cfg, NoCsit{}, constant_policy(InflationFactor::identity(2)), mc);
  CHECK_THAT(half.rate, WithinAbs(0.5 * full.rate, 1e-12));
}

TEST_CASE("Monte-Carlo estimates do not depend on the thread count") {
  const auto cfg = ChannelConfig::scaled_identity(2, 2, 10, 10, 1);
  const auto policy = constant_policy(InflationFactor::identity(2));
  MonteCarloConfig mc{64, 16, 77, 1};
  const auto a = sample_rate_terms(cfg, QuantizedCsit{build_quantizer(1)}, policy, mc);
  mc.threads = 5;
  const auto b = sample_rate_terms(cfg, QuantizedCsit{build_quantizer(1)}, policy, mc);
  CHECK(a.rate == b.rate);
  CHECK(a.bound == b.bound);
  CHECK(a.n_inner == 16);
}

TEST_CASE("delta_r is computed from the reported rate and bound") {
  const auto cfg = ChannelConfig::scaled_identity(2, 3, 30, 30, 1);
  MonteCarloConfig mc{100, 20, 5, 2};
  const auto g = delta_r(cfg, NoCsit{}, constant_policy(InflationFactor::identity(2)), mc);
  CHECK(g.delta == g.bound.rate - g.rate.rate);
  CHECK(g.delta_std_error > 0.0);
  CHECK(g.delta_std_error < g.rate.std_error);
}
