#include <catch_amalgamated.hpp>

#include <cmath>

#include "dpc/errors.hpp"
#include "dpc/solvers.hpp"

using namespace dpc;
using Catch::Matchers::WithinAbs;

namespace {

CMatrix fixed_channel(int r, int t) {
  CMatrix h(r, t);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < t; ++j) h(i, j) = std::cos(1.0 + 2.3 * i + 0.7 * j) + 0.3 * (i == j);
  return h;
}

ChannelConfig point_mass_config(int t, int r, double p, double q) {
  return ChannelConfig::scaled_identity(t, r, p, q, 1.0, PointMass{fixed_channel(r, t)});
}

}  // namespace

TEST_CASE("perfect-CSIT factor reduces to Costa's scalar") {
  for (double p : {1.0, 10.0, 100.0}) {
    const auto cfg = ChannelConfig::scaled_identity(1, 1, p, 3.0, 1.0);
    const auto w = perfect_csit_w(cfg, CMatrix::Identity(1, 1));
    CHECK_THAT(w.w(0, 0).real(), WithinAbs(p / (p + 1.0), 1e-14));
  }
}

TEST_CASE("single-antenna closed form equals the perfect-CSIT factor on a point mass") {
  const auto cfg = point_mass_config(1, 2, 7.0, 4.0);
  const CMatrix h = std::get<PointMass>(cfg.fading).h;
  const auto w = single_antenna_w(cfg, {h});
  CHECK(max_abs(w.w - perfect_csit_w(cfg, h).w) < 1e-8);
}

TEST_CASE("scalar search lies in [0, 1] and finds Costa's factor") {
  const auto cfg = ChannelConfig::scaled_identity(1, 1, 10, 10, 1, PointMass{CMatrix::Identity(1, 1)});
  const auto w = siso_optimal_w(cfg, ConditionalLaw::marginal(cfg), 10, RandomStream(1));
  CHECK_THAT(w.w(0, 0).real(), WithinAbs(10.0 / 11.0, 1e-5));
  const auto mimo = ChannelConfig::scaled_identity(2, 1, 1, 1, 1);
  CHECK_THROWS_AS(siso_optimal_w(mimo, ConditionalLaw::marginal(mimo), 10, RandomStream(1)), NotSiso);
}

TEST_CASE("scalar search with fading and no CSIT") {
  // Optimum of a 2000-draw batch found independently by dense search: about 0.90.
  const auto cfg = ChannelConfig::scaled_identity(1, 1, 10, 10, 1);
  const auto w = siso_optimal_w(cfg, ConditionalLaw::marginal(cfg), 2000, RandomStream(2));
  CHECK_THAT(w.w(0, 0).real(), WithinAbs(0.90, 0.03));
}

TEST_CASE("both iterative solvers recover the perfect-CSIT optimum on a point mass") {
  for (auto [t, r] : {std::pair{2, 2}, std::pair{3, 2}}) {
    const auto cfg = point_mass_config(t, r, 10.0, 10.0);
    const CMatrix h = std::get<PointMass>(cfg.fading).h;
    const auto law = ConditionalLaw::point_mass(h);
    const double target = batch_rate(cfg, {h}, perfect_csit_w(cfg, h));
    SolverConfig sc;
    const auto a1 = algorithm1(cfg, law, sc, RandomStream(3));
    const auto a2 = algorithm2(cfg, law, sc, RandomStream(3));
    CHECK_THAT(a1.rate.rate, WithinAbs(target, 1e-3));
    CHECK_THAT(a2.rate.rate, WithinAbs(target, 1e-3));
    CHECK(a2.converged);
    CHECK(a2.residual < 1e-3);
  }
}

TEST_CASE("the perfect-CSIT factor is a fixed point with zero residual") {
  const auto cfg = point_mass_config(3, 2, 10.0, 10.0);
  const CMatrix h = std::get<PointMass>(cfg.fading).h;
  const auto w = perfect_csit_w(cfg, h);
  CHECK(stationarity_residual(cfg, {h}, w) < 1e-8);
  CHECK(max_abs(fixed_point_map(cfg, {h}, w).w - w.w) < 1e-8);
}

TEST_CASE("Algorithm 1 row steps never increase their Jensen bound") {
  const auto cfg = ChannelConfig::scaled_identity(3, 2, 10, 10, 1);
  SolverConfig sc;
  sc.mc_inner = 100;
  const auto res = algorithm1(cfg, ConditionalLaw::marginal(cfg), sc, RandomStream(4));
  REQUIRE_FALSE(res.jensen_trace.empty());
  for (const auto& step : res.jensen_trace) CHECK(step.after <= step.before + kJensenSlack);
}

TEST_CASE("a single row update minimizes the Jensen bound along that row") {
  const auto cfg = ChannelConfig::scaled_identity(2, 2, 10, 10, 1);
  RandomStream rng(6);
  const auto batch = solver_batch(ConditionalLaw::marginal(cfg), 100, rng, 0);
  InflationFactor w = InflationFactor::identity(2);
  const CMatrix row = jensen_row_update(cfg, batch, w, 0);
  InflationFactor best = w;
  best.w.row(0) = row;
  const double at_best = jensen_row_bound(cfg, batch, best, 0);
  CHECK(at_best <= jensen_row_bound(cfg, batch, w, 0) + 1e-12);
  for (double eps : {1e-3, -1e-3}) {
    InflationFactor nudged = best;
    nudged.w(0, 1) += eps;
    CHECK(jensen_row_bound(cfg, batch, nudged, 0) >= at_best - 1e-12);
  }
}

TEST_CASE("Algorithm 2 is stationary with a rank-deficient interference covariance") {
  auto cfg = ChannelConfig::scaled_identity(2, 2, 10, 10, 1);
  CVector v(2);
  v << 1.0, 1.0;
  cfg.sigma_s = PsdMatrix(5.0 * v * v.adjoint());
  SolverConfig sc;
  sc.mc_inner = 100;
  const auto res = algorithm2(cfg, ConditionalLaw::marginal(cfg), sc, RandomStream(8));
  CHECK(res.converged);
  CHECK(res.residual < 1e-3);
  CVector null(2);
  null << 1.0, -1.0;
  CHECK((res.w.w * null).norm() < 1e-10);
}

TEST_CASE("Algorithm 2 beats the identity factor without CSIT") {
  const auto cfg = ChannelConfig::scaled_identity(2, 2, 10, 10, 1);
  SolverConfig sc;
  sc.mc_inner = 150;
  const RandomStream stream(9);
  const auto res = algorithm2(cfg, ConditionalLaw::marginal(cfg), sc, stream);
  const auto batch = solver_batch(ConditionalLaw::marginal(cfg), sc.mc_inner, stream, 0);
  CHECK(batch_rate(cfg, batch, res.w) >= batch_rate(cfg, batch, InflationFactor::identity(2)));
}

TEST_CASE("reduced objective differs from log|M| by log|Y|") {
  const auto cfg = ChannelConfig::scaled_identity(2, 2, 4, 9, 1);
  RandomStream rng(10);
  const auto batch = solver_batch(ConditionalLaw::marginal(cfg), 50, rng, 0);
  InflationFactor w{CMatrix::Identity(2, 2) * 0.7};
  w.w(0, 1) = 0.2;
  double mean_logy = 0.0;
  for (const auto& h : batch) mean_logy += logdet(received_covariance(cfg, h));
  mean_logy /= static_cast<double>(batch.size());
  CHECK_THAT(reduced_objective(cfg, batch, w), WithinAbs(batch_objective(cfg, batch, w) - mean_logy, 1e-9));
}

TEST_CASE("brute force agrees with the scalar search to grid resolution") {
  const auto cfg = ChannelConfig::scaled_identity(1, 1, 10, 10, 1);
  const auto law = ConditionalLaw::marginal(cfg);
  GridSpec grid{0.0, 1.0, 0.01, true};
  const RandomStream stream(12);
  const auto wb = brute_force_w(cfg, law, grid, 500, stream);
  const auto ws = siso_optimal_w(cfg, law, 500, stream);
  CHECK_THAT(wb.w(0, 0).real(), WithinAbs(ws.w(0, 0).real(), 0.011));
}

TEST_CASE("brute force refuses oversized grids") {
  const auto cfg = ChannelConfig::scaled_identity(3, 3, 1, 1, 1);
  GridSpec grid{-1.0, 1.0, 0.01, true};
  CHECK_THROWS_AS(brute_force_w(cfg, ConditionalLaw::marginal(cfg), grid, 10, RandomStream(1)), GridTooLarge);
}
