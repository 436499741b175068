#pragma once

// Achievable rate of dirty paper coding with U = X + W S over the fading
// channel, the interference-free bound and their gap, by seeded Monte Carlo.

#include <cstdint>
#include <functional>
#include <vector>

#include "dpc/channel.hpp"
#include "dpc/numerics.hpp"

namespace dpc {

/// The t x t inflation factor W of the auxiliary variable U = X + W S.
struct InflationFactor {
  CMatrix w;

  static InflationFactor identity(int t) { return {CMatrix::Identity(t, t)}; }
  static InflationFactor zero(int t) { return {CMatrix::Zero(t, t)}; }
  static InflationFactor scalar(Complex value) { return {CMatrix::Constant(1, 1, value)}; }
};

/// Covariance of the stacked vector (U, Y):
///
///   [ Sx + W Ss W*      (Sx + W Ss) H*        ]
///   [ H (Sx + Ss W*)    H (Sx + Ss) H* + Sz   ]
struct BlockMatrixM {
  CMatrix full;
  int t = 0;
  int r = 0;

  /// M with row/column k of the U block moved to the front, split as
  /// [[a, B*], [B, D]].
  struct RowPartition {
    Complex a;
    CVector b;
    CMatrix d;
    std::vector<Eigen::Index> order;  // original indices in partition order
  };
  RowPartition partition_for_row(int k) const;

  CMatrix top_left() const { return full.topLeftCorner(t, t); }
  CMatrix top_right() const { return full.topRightCorner(t, r); }
  CMatrix bottom_left() const { return full.bottomLeftCorner(r, t); }
  CMatrix bottom_right() const { return full.bottomRightCorner(r, r); }
};

/// D^-1 = [[F, G], [J, K]] with F (t-1)x(t-1) and K r x r.
struct DInverseBlocks {
  CMatrix f, g, j, k;
};
DInverseBlocks split_d_inverse(const CMatrix& d_inverse, int t);

BlockMatrixM assemble_m(const ChannelConfig& config, const InflationFactor& w, const CMatrix& h);

/// H (Sx + Ss) H* + Sz, the r x r block that does not depend on W.
CMatrix received_covariance(const ChannelConfig& config, const CMatrix& h);

/// log|Sx| + log|H(Sx+Ss)H* + Sz| - log|M(W, H)| in nats.
double rate_integrand(const ChannelConfig& config, const InflationFactor& w, const CMatrix& h);

/// log|Sz + H Sx H*| - log|Sz| in nats.
double bound_integrand(const ChannelConfig& config, const CMatrix& h);

struct MonteCarloConfig {
  std::size_t n_outer = 500;
  std::size_t n_inner = 200;
  std::uint64_t seed = 12345;
  unsigned threads = 1;
};

struct RateEstimate {
  double rate = 0.0;       // bits per channel use
  double std_error = 0.0;  // from the spread of the outer samples
  std::size_t n_outer = 0;
  std::size_t n_inner = 0;
};

/// Inflation factor chosen by the transmitter from what it observes.
using WPolicy = std::function<InflationFactor(const CsitObservation&)>;

WPolicy constant_policy(InflationFactor w);

/// Per-outer-sample averages, in nats, before the bits conversion. Identical
/// (config, csit, mc) always produce identical draws, so two calls with
/// different policies are paired sample by sample.
struct RateSamples {
  std::vector<double> rate;   // empty when no policy was evaluated
  std::vector<double> bound;
  std::size_t n_inner = 0;    // inner draws actually used per outer sample
};

RateSamples sample_rate_terms(const ChannelConfig& config, const CsitModel& csit, const WPolicy& policy,
                              const MonteCarloConfig& mc);

/// Mean and standard error (bits) of per-sample nat values.
RateEstimate summarize(const std::vector<double>& nats, double rate_scale, std::size_t n_inner);

RateEstimate achievable_rate(const ChannelConfig& config, const CsitModel& csit, const WPolicy& policy,
                             const MonteCarloConfig& mc);

RateEstimate no_interference_bound(const ChannelConfig& config, const MonteCarloConfig& mc);

struct GapEstimate {
  RateEstimate rate;
  RateEstimate bound;
  double delta = 0.0;  // bound.rate - rate.rate, exactly
  double delta_std_error = 0.0;
};

/// Rate, bound and their difference from one set of draws.
GapEstimate delta_r(const ChannelConfig& config, const CsitModel& csit, const WPolicy& policy,
                    const MonteCarloConfig& mc);

}  // namespace dpc
