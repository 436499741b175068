#pragma once

// Experiment runner: rate-versus-SNR sweeps, solver comparisons, high-SNR
// scaling and gap checks, CSV emission.

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "dpc/channel.hpp"
#include "dpc/rate.hpp"
#include "dpc/solvers.hpp"

namespace dpc {

enum class Algorithm { Alg1, Alg2, Identity, Zero, Siso, Brute };

std::string algorithm_label(Algorithm a);
Algorithm parse_algorithm(std::string_view label);
/// "none", "perfect" or "b<bits>".
CsitModel parse_csit(std::string_view label);
/// "real" or "complex".
FadingKind parse_fading(std::string_view label);

struct ExperimentSpec {
  int t = 3;
  int r = 2;
  std::vector<double> p_grid_db{0, 5, 10, 15, 20, 25, 30};
  double q_over_p = 1.0;
  std::vector<CsitModel> csit{QuantizedCsit{build_quantizer(1)}, QuantizedCsit{build_quantizer(2)}};
  std::vector<Algorithm> algorithms{Algorithm::Alg1};
  std::uint64_t seed = 12345;
  std::size_t n_outer = 500;
  std::size_t n_inner = 200;
  FadingKind fading = RealGaussian{};
  SolverConfig solver;
  GridSpec grid;
  unsigned threads = 1;
  int tail_points = 4;
  std::string out;  // CSV destination; empty means standard output
};

void validate(const ExperimentSpec& spec);

/// Applies one `key = value` setting. Keys match the CLI flag names with
/// underscores (p_grid_db for --p-grid-db).
void apply_setting(ExperimentSpec& spec, std::string_view key, std::string_view value);

/// Parses flat `key = value` text with `#` comments on top of `base`.
ExperimentSpec parse_spec(std::string_view text, ExperimentSpec base = {});

/// Named starting points: "3x2" and "3x3".
ExperimentSpec preset(std::string_view name);

ChannelConfig cell_channel(const ExperimentSpec& spec, double p_db);

MonteCarloConfig evaluation_mc(const ExperimentSpec& spec);

/// Solver bookkeeping accumulated across every H-hat a policy solves for.
struct PolicyStats {
  std::mutex mutex;
  int solves = 0;
  int max_iterations = 0;
  double max_residual = 0.0;
  bool all_converged = true;
  bool has_residual = false;
};

/// Policy that solves for W per distinct observation, memoised on the
/// observation key. Solver draws are keyed by (seed, observation), so the
/// result never depends on evaluation order or thread count.
WPolicy make_policy(const ChannelConfig& config, Algorithm algorithm, const SolverConfig& solver,
                    const GridSpec& grid, std::uint64_t seed, std::shared_ptr<PolicyStats> stats);

struct CurvePoint {
  double p_db = 0.0;
  double q_over_p = 0.0;
  int t = 0;
  int r = 0;
  std::string fading;
  std::string csit;
  std::string algorithm;
  double rate = 0.0;
  double std_err = 0.0;
  double bound = 0.0;
  double bound_std_err = 0.0;
  double delta_r = 0.0;
  double delta_std_err = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  bool failed = false;
  std::string error;
};

/// One sweep cell together with its per-sample terms for paired comparisons.
struct CellResult {
  CurvePoint point;
  RateSamples samples;
};

CellResult evaluate_cell(const ExperimentSpec& spec, double p_db, const CsitModel& csit, Algorithm algorithm);

std::vector<CurvePoint> rate_sweep(const ExperimentSpec& spec);

inline constexpr std::string_view kCsvHeader =
    "p_db,q_over_p,t,r,fading,csit,algorithm,rate_bits,std_err,bound_bits,delta_r,iterations,residual,converged";

std::string to_csv(const std::vector<CurvePoint>& points);

struct ScalingResult {
  std::string csit;
  std::string algorithm;
  std::vector<CurvePoint> points;
  double slope = 0.0;
  double expected = 0.0;
  bool pass = false;
};

/// Least-squares slope of rate (bits) against log2(SNR) over the last
/// tail_points grid points, one result per (csit, algorithm) in the spec.
std::vector<ScalingResult> scaling_check(const ExperimentSpec& spec, int tail_points);

/// Slope of y against x by ordinary least squares.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

struct DeltaRRow {
  double p_db = 0.0;
  double delta = 0.0;
  double std_err = 0.0;
};

struct DeltaRResult {
  std::vector<DeltaRRow> rows;
  bool nonincreasing = false;
  bool tail_small = false;
  bool pass = false;
};

inline constexpr double kDeltaRTail = 0.1;

/// Gap between the interference-free bound and the W = I rate on each grid
/// point. Requires t <= r.
DeltaRResult delta_r_check(const ExperimentSpec& spec);

struct ComparisonRow {
  double p_db = 0.0;
  std::string csit;
  CurvePoint alg1;
  CurvePoint alg2;
  double gap = 0.0;  // alg1 - alg2, bits
  double gap_std_err = 0.0;
  bool flagged = false;  // |gap| > 2 gap_std_err
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;
  double fraction_within = 0.0;
};

ComparisonResult compare_algorithms(const ExperimentSpec& spec);

}  // namespace dpc
