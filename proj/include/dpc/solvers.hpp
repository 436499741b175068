#pragma once

// Inflation-factor solvers: the perfect-CSIT closed form, the scalar search
// for single-antenna links, row-wise coordinate descent on a Jensen upper
// bound (Algorithm 1), the stationarity fixed point (Algorithm 2) and an
// exhaustive grid oracle.

#include <cstdint>
#include <optional>
#include <vector>

#include "dpc/channel.hpp"
#include "dpc/rate.hpp"

namespace dpc {

struct SolverConfig {
  int max_iters = 200;
  double rel_tol = 1e-5;
  double damping = 1.0;         // Algorithm 2 relaxation, halved on rate regression
  double damping_floor = 0.125;
  std::size_t mc_inner = 200;   // conditional draws per expectation batch
  bool refresh_batches = false; // fresh batch per iteration instead of one frozen batch
};

/// One row update of Algorithm 1 on a frozen batch.
struct JensenStep {
  int sweep = 0;
  int row = 0;
  double before = 0.0;  // E log|D| + log E(a - B* D^-1 B), nats
  double after = 0.0;
};

struct SolverResult {
  InflationFactor w;
  RateEstimate rate;  // on the solver's final batch
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // ||E(A1 W + A2* H) Ss||_max on the final batch
  std::vector<JensenStep> jensen_trace;
  std::vector<double> rate_trace;  // batch rate (bits) after each iteration
};

/// Expectations entering the stationarity condition, [A1; A2] = M^-1 [I; 0].
struct FixedPointState {
  CMatrix a1;   // E A1, t x t
  CMatrix a2h;  // E A2* H, t x t
};

struct GridSpec {
  double lo = -0.5;
  double hi = 1.5;
  double step = 0.05;
  bool real_entries = true;  // false searches real and imaginary parts
};

inline constexpr double kMaxGridPoints = 1e7;
inline constexpr double kJensenSlack = 1e-9;
inline constexpr double kDivergenceBits = 0.5;
inline constexpr double kStationarityTol = 1e-3;  // Algorithm 2 also needs this residual to stop

/// Sx H* (H Sx H* + Sz)^-1 H.
InflationFactor perfect_csit_w(const ChannelConfig& config, const CMatrix& h);

/// Minimizes the sample mean of log(|h|^2 P Q |1-W|^2 + |W|^2 Q N + P N) over
/// W in [0, 1]: a 1e-3 grid followed by golden-section refinement to 1e-6.
InflationFactor siso_optimal_w(const ChannelConfig& config, const ConditionalLaw& law, std::size_t mc_inner,
                               const RandomStream& stream);

/// Single-transmit-antenna closed form of the Jensen-bound minimizer:
/// W = P E(K) (1 - Q E(K))^-1 with K = H* (H (P+Q) H* + Sz)^-1 H.
InflationFactor single_antenna_w(const ChannelConfig& config, const std::vector<CMatrix>& batch);

SolverResult algorithm1(const ChannelConfig& config, const ConditionalLaw& law, const SolverConfig& solver,
                        const RandomStream& stream);

SolverResult algorithm2(const ChannelConfig& config, const ConditionalLaw& law, const SolverConfig& solver,
                        const RandomStream& stream, std::optional<InflationFactor> initial = std::nullopt);

InflationFactor brute_force_w(const ChannelConfig& config, const ConditionalLaw& law, const GridSpec& grid,
                              std::size_t mc_inner, const RandomStream& stream);

// Building blocks, exposed for tests and diagnostics.

/// The batch a solver uses at a given iteration.
std::vector<CMatrix> solver_batch(const ConditionalLaw& law, std::size_t n, const RandomStream& stream,
                                  std::uint64_t index);

/// Mean of rate_integrand over the batch, in bits.
double batch_rate(const ChannelConfig& config, const std::vector<CMatrix>& batch, const InflationFactor& w);

/// Mean of log|M| over the batch, in nats.
double batch_objective(const ChannelConfig& config, const std::vector<CMatrix>& batch, const InflationFactor& w);

/// E log|D_k| + log E(a_k - B_k* D_k^-1 B_k) for row k, nats.
double jensen_row_bound(const ChannelConfig& config, const std::vector<CMatrix>& batch, const InflationFactor& w,
                        int k);

/// Row k of W minimizing the Jensen bound with all other rows frozen.
CMatrix jensen_row_update(const ChannelConfig& config, const std::vector<CMatrix>& batch,
                          const InflationFactor& w, int k);

FixedPointState fixed_point_state(const ChannelConfig& config, const std::vector<CMatrix>& batch,
                                  const InflationFactor& w);

/// -(E A1)^-1 E(A2* H), restricted to the range of Ss.
InflationFactor fixed_point_map(const ChannelConfig& config, const std::vector<CMatrix>& batch,
                                const InflationFactor& w);

double stationarity_residual(const ChannelConfig& config, const std::vector<CMatrix>& batch,
                             const InflationFactor& w);

/// Scalar single-antenna objective averaged over the batch (nats).
double siso_objective(const ChannelConfig& config, const std::vector<CMatrix>& batch, double w);

/// Mean log|Sx + W Ss W* - (Sx + W Ss) K (Sx + Ss W*)| with K = H* Y^-1 H:
/// log|M| minus the W-independent log|Y|.
double reduced_objective(const ChannelConfig& config, const std::vector<CMatrix>& batch, const InflationFactor& w);

}  // namespace dpc
