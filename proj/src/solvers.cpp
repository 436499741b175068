#include "dpc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dpc/errors.hpp"

namespace dpc {

namespace {

constexpr double kGolden = 0.6180339887498949;

bool interference_free(const ChannelConfig& config) { return max_abs(config.sigma_s.matrix()) == 0.0; }

// Projector onto the range of Ss; W acts as zero on its null space.
CMatrix range_projector(const ChannelConfig& config) {
  const CMatrix u = range_basis(psd_spectral(config.sigma_s));
  return u * u.adjoint();
}

std::vector<Eigen::Index> other_rows(int t, int k) {
  std::vector<Eigen::Index> rest;
  for (int i = 0; i < t; ++i)
    if (i != k) rest.push_back(i);
  return rest;
}

CMatrix select_rows(const CMatrix& a, const std::vector<Eigen::Index>& rows) {
  CMatrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = a.row(rows[i]);
  return out;
}

// Per-row quantities of Algorithm 1. D (and hence D^-1) does not depend on row k.
struct RowSystem {
  int k = 0;
  std::vector<Eigen::Index> rest;
  CMatrix c;  // row k of Sx without column k, 1 x (t-1)
  CMatrix s;  // row k of Sx, 1 x t
  CMatrix v;  // W without row k, (t-1) x t
  std::vector<CMatrix> d_inv;
  double mean_log_d = 0.0;
  CMatrix ef, egh, ehj, ehkh;
};

RowSystem build_row_system(const ChannelConfig& config, const std::vector<CMatrix>& batch, const InflationFactor& w,
                           int k) {
  const int t = config.t;
  const int r = config.r;
  const CMatrix& sx = config.sigma_x.matrix();
  RowSystem sys;
  sys.k = k;
  sys.rest = other_rows(t, k);
  const auto u = static_cast<Eigen::Index>(sys.rest.size());
  sys.c.resize(1, u);
  for (Eigen::Index i = 0; i < u; ++i) sys.c(0, i) = sx(k, sys.rest[static_cast<std::size_t>(i)]);
  sys.s = sx.row(k);
  sys.v = select_rows(w.w, sys.rest);
  sys.ef = CMatrix::Zero(u, u);
  sys.egh = CMatrix::Zero(u, t);
  sys.ehj = CMatrix::Zero(t, u);
  sys.ehkh = CMatrix::Zero(t, t);
  sys.d_inv.reserve(batch.size());
  for (const auto& h : batch) {
    const auto part = assemble_m(config, w, h).partition_for_row(k);
    sys.mean_log_d += logdet(part.d);
    CMatrix d_inv = inverse(part.d);
    const auto blocks = split_d_inverse(d_inv, t);
    sys.ef += blocks.f;
    sys.egh += blocks.g * h;
    sys.ehj += h.adjoint() * blocks.j;
    sys.ehkh += h.adjoint() * blocks.k * h;
    sys.d_inv.push_back(std::move(d_inv));
  }
  const double n = static_cast<double>(batch.size());
  sys.mean_log_d /= n;
  sys.ef /= n;
  sys.egh /= n;
  sys.ehj /= n;
  sys.ehkh /= n;
  (void)r;
  return sys;
}

// Sample mean of a - B* D^-1 B with row k of W set to x.
double mean_schur(const ChannelConfig& config, const RowSystem& sys, const std::vector<CMatrix>& batch,
                  const CMatrix& x) {
  const CMatrix& ss = config.sigma_s.matrix();
  const CMatrix xs = x * ss;
  const double a = (config.sigma_x.matrix()(sys.k, sys.k) + (xs * x.adjoint())(0, 0)).real();
  const CMatrix u = sys.c + xs * sys.v.adjoint();
  const CMatrix srow = sys.s + xs;
  double acc = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    CMatrix b_star(1, u.cols() + config.r);
    b_star << u, srow * batch[n].adjoint();
    acc += a - (b_star * sys.d_inv[n] * b_star.adjoint())(0, 0).real();
  }
  return acc / static_cast<double>(batch.size());
}

// Completing the square in x for the quadratic E(a - B* D^-1 B).
CMatrix minimize_row(const ChannelConfig& config, const RowSystem& sys, const CMatrix& range) {
  const CMatrix& ss = config.sigma_s.matrix();
  const CMatrix& v = sys.v;
  const CMatrix b = sys.c * sys.ef * v * ss + sys.s * sys.ehj * v * ss + sys.c * sys.egh * ss + sys.s * sys.ehkh * ss;
  const CMatrix a = ss - ss * (v.adjoint() * sys.ef * v + v.adjoint() * sys.egh + sys.ehj * v + sys.ehkh) * ss;
  const CMatrix a_reduced = range.adjoint() * a * range;
  const CMatrix b_reduced = b * range;
  const CMatrix y = b_reduced * inverse(a_reduced);
  return y * range.adjoint();
}

RateEstimate batch_estimate(const ChannelConfig& config, const std::vector<CMatrix>& batch, const InflationFactor& w) {
  std::vector<double> nats;
  nats.reserve(batch.size());
  for (const auto& h : batch) nats.push_back(rate_integrand(config, w, h));
  return summarize(nats, config.rate_scale(), batch.size());
}

bool negligible_change(double before, double after, double rel_tol) {
  return std::abs(after - before) <= rel_tol * std::max(std::abs(before), 1e-12);
}

SolverResult trivial_result(const ChannelConfig& config, const std::vector<CMatrix>& batch) {
  SolverResult out;
  out.w = InflationFactor::zero(config.t);
  out.rate = batch_estimate(config, batch, out.w);
  out.converged = true;
  out.residual = 0.0;
  return out;
}

// Exhaustive grid search over W, templated on the arithmetic of the data.
template <class Scalar>
InflationFactor grid_search(const ChannelConfig& config, const std::vector<CMatrix>& batch, const GridSpec& grid,
                            std::size_t per_axis) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;
  const int t = config.t;
  auto cast = [](const CMatrix& m) -> Mat {
    if constexpr (std::is_same_v<Scalar, double>) {
      return m.real();
    } else {
      return m;
    }
  };
  const CMatrix& sx = config.sigma_x.matrix();
  const CMatrix& ss = config.sigma_s.matrix();
  std::vector<Mat> c0, c1, c2;
  for (const auto& h : batch) {
    const CMatrix k = h.adjoint() * inverse(received_covariance(config, h)) * h;
    c0.push_back(cast(sx - sx * k * sx));
    c1.push_back(cast(ss - ss * k * ss));
    c2.push_back(cast(ss * k * sx));
  }

  const std::size_t entries = static_cast<std::size_t>(t) * static_cast<std::size_t>(t);
  const std::size_t dims = grid.real_entries ? entries : 2 * entries;
  std::vector<std::size_t> idx(dims, 0);
  auto value = [&](std::size_t i) { return grid.lo + static_cast<double>(i) * grid.step; };

  Mat w(t, t), best_w(t, t), s(t, t);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    for (std::size_t e = 0; e < entries; ++e) {
      const auto row = static_cast<Eigen::Index>(e / static_cast<std::size_t>(t));
      const auto col = static_cast<Eigen::Index>(e % static_cast<std::size_t>(t));
      if constexpr (std::is_same_v<Scalar, double>) {
        w(row, col) = value(idx[e]);
      } else {
        w(row, col) = grid.real_entries ? Complex(value(idx[e]), 0.0) : Complex(value(idx[2 * e]), value(idx[2 * e + 1]));
      }
    }
    double acc = 0.0;
    for (std::size_t n = 0; n < c0.size(); ++n) {
      s.noalias() = w * c1[n] * w.adjoint();
      s.noalias() -= w * c2[n];
      s.noalias() -= c2[n].adjoint() * w.adjoint();
      s += c0[n];
      double det;
      if (t == 1) {
        det = std::real(s(0, 0));
      } else if (t == 2) {
        det = std::real(s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0));
      } else {
        det = std::abs(s.determinant());
      }
      acc += std::log(std::max(det, std::numeric_limits<double>::min()));
    }
    if (acc < best) {
      best = acc;
      best_w = w;
    }
    // odometer, last axis fastest: lexicographic order
    std::size_t d = dims;
    while (d > 0) {
      --d;
      if (++idx[d] < per_axis) break;
      idx[d] = 0;
      if (d == 0) {
        InflationFactor out;
        if constexpr (std::is_same_v<Scalar, double>) {
          out.w = best_w.template cast<Complex>();
        } else {
          out.w = best_w;
        }
        return out;
      }
    }
  }
}

}  // namespace

InflationFactor perfect_csit_w(const ChannelConfig& config, const CMatrix& h) {
  const CMatrix& sx = config.sigma_x.matrix();
  return {sx * h.adjoint() * inverse(h * sx * h.adjoint() + config.sigma_z.matrix()) * h};
}

std::vector<CMatrix> solver_batch(const ConditionalLaw& law, std::size_t n, const RandomStream& stream,
                                  std::uint64_t index) {
  RandomStream s = stream.substream(stream_key::kSolverBatch).substream(index);
  return law.batch(n, s);
}

double batch_rate(const ChannelConfig& config, const std::vector<CMatrix>& batch, const InflationFactor& w) {
  return batch_estimate(config, batch, w).rate;
}

double batch_objective(const ChannelConfig& config, const std::vector<CMatrix>& batch, const InflationFactor& w) {
  double acc = 0.0;
  for (const auto& h : batch) acc += logdet(assemble_m(config, w, h).full);
  return acc / static_cast<double>(batch.size());
}

double siso_objective(const ChannelConfig& config, const std::vector<CMatrix>& batch, double w) {
  const double p = config.sigma_x.matrix()(0, 0).real();
  const double q = config.sigma_s.matrix()(0, 0).real();
  const double n = config.sigma_z.matrix()(0, 0).real();
  double acc = 0.0;
  for (const auto& h : batch) {
    const double g = std::norm(h(0, 0));
    acc += std::log(g * p * q * (1.0 - w) * (1.0 - w) + w * w * q * n + p * n);
  }
  return acc / static_cast<double>(batch.size());
}

InflationFactor siso_optimal_w(const ChannelConfig& config, const ConditionalLaw& law, std::size_t mc_inner,
                               const RandomStream& stream) {
  validate(config);
  if (config.t != 1 || config.r != 1) throw NotSiso("siso_optimal_w needs t = r = 1");
  const auto batch = solver_batch(law, mc_inner, stream, 0);
  auto f = [&](double w) { return siso_objective(config, batch, w); };

  constexpr int kGridPoints = 1001;
  double best_w = 0.0;
  double best = f(0.0);
  for (int i = 1; i < kGridPoints; ++i) {
    const double w = i * 1e-3;
    const double v = f(w);
    if (v < best) {
      best = v;
      best_w = w;
    }
  }

  double lo = std::max(0.0, best_w - 1e-3);
  double hi = std::min(1.0, best_w + 1e-3);
  double x1 = hi - kGolden * (hi - lo);
  double x2 = lo + kGolden * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > 1e-6) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = f(x2);
    }
  }
  const double mid = 0.5 * (lo + hi);
  // keep the grid point if refinement did not strictly improve on it
  return InflationFactor::scalar(f(mid) < best ? mid : best_w);
}

InflationFactor single_antenna_w(const ChannelConfig& config, const std::vector<CMatrix>& batch) {
  if (config.t != 1) throw DimensionMismatch("single_antenna_w needs t = 1");
  const Complex p = config.sigma_x.matrix()(0, 0);
  const Complex q = config.sigma_s.matrix()(0, 0);
  if (q == Complex(0.0)) return InflationFactor::zero(1);
  Complex k_mean(0.0);
  for (const auto& h : batch) k_mean += (h.adjoint() * inverse(received_covariance(config, h)) * h)(0, 0);
  k_mean /= static_cast<double>(batch.size());
  return InflationFactor::scalar(p * k_mean / (1.0 - q * k_mean));
}

double jensen_row_bound(const ChannelConfig& config, const std::vector<CMatrix>& batch, const InflationFactor& w,
                        int k) {
  const RowSystem sys = build_row_system(config, batch, w, k);
  return sys.mean_log_d + std::log(mean_schur(config, sys, batch, w.w.row(k)));
}

CMatrix jensen_row_update(const ChannelConfig& config, const std::vector<CMatrix>& batch, const InflationFactor& w,
                          int k) {
  const RowSystem sys = build_row_system(config, batch, w, k);
  return minimize_row(config, sys, range_basis(psd_spectral(config.sigma_s)));
}

SolverResult algorithm1(const ChannelConfig& config, const ConditionalLaw& law, const SolverConfig& solver,
                        const RandomStream& stream) {
  validate(config);
  auto batch = solver_batch(law, solver.mc_inner, stream, 0);
  if (interference_free(config)) return trivial_result(config, batch);

  const CMatrix range = range_basis(psd_spectral(config.sigma_s));
  SolverResult out;
  out.w = InflationFactor::identity(config.t);

  for (int sweep = 1; sweep <= solver.max_iters; ++sweep) {
    if (solver.refresh_batches && sweep > 1) batch = solver_batch(law, solver.mc_inner, stream, sweep - 1);
    const double rate_before = batch_rate(config, batch, out.w);

    for (int k = 0; k < config.t; ++k) {
      const RowSystem sys = build_row_system(config, batch, out.w, k);
      const double before = sys.mean_log_d + std::log(mean_schur(config, sys, batch, out.w.w.row(k)));
      const CMatrix row = config.t == 1 ? single_antenna_w(config, batch).w : minimize_row(config, sys, range);
      const double after = sys.mean_log_d + std::log(mean_schur(config, sys, batch, row));
      out.jensen_trace.push_back({sweep, k, before, after});
      if (after > before + kJensenSlack) {
        throw NonDecreasingBound("Jensen bound rose from " + std::to_string(before) + " to " +
                                 std::to_string(after) + " at sweep " + std::to_string(sweep) + ", row " +
                                 std::to_string(k));
      }
      out.w.w.row(k) = row;
    }

    const double rate_after = batch_rate(config, batch, out.w);
    out.rate_trace.push_back(rate_after);
    out.iterations = sweep;
    // with one row the update is closed form and does not depend on the start
    if (config.t == 1 || negligible_change(rate_before, rate_after, solver.rel_tol)) {
      out.converged = true;
      break;
    }
  }
  out.rate = batch_estimate(config, batch, out.w);
  out.residual = stationarity_residual(config, batch, out.w);
  return out;
}

FixedPointState fixed_point_state(const ChannelConfig& config, const std::vector<CMatrix>& batch,
                                  const InflationFactor& w) {
  const int t = config.t;
  const int r = config.r;
  FixedPointState st{CMatrix::Zero(t, t), CMatrix::Zero(t, t)};
  for (const auto& h : batch) {
    const CMatrix m_inv = inverse(assemble_m(config, w, h).full);
    st.a1 += m_inv.topLeftCorner(t, t);
    st.a2h += m_inv.bottomLeftCorner(r, t).adjoint() * h;
  }
  const double n = static_cast<double>(batch.size());
  st.a1 /= n;
  st.a2h /= n;
  return st;
}

InflationFactor fixed_point_map(const ChannelConfig& config, const std::vector<CMatrix>& batch,
                                const InflationFactor& w) {
  const auto st = fixed_point_state(config, batch, w);
  return {-inverse(st.a1) * st.a2h * range_projector(config)};
}

double stationarity_residual(const ChannelConfig& config, const std::vector<CMatrix>& batch,
                             const InflationFactor& w) {
  const auto st = fixed_point_state(config, batch, w);
  return max_abs((st.a1 * w.w + st.a2h) * config.sigma_s.matrix());
}

SolverResult algorithm2(const ChannelConfig& config, const ConditionalLaw& law, const SolverConfig& solver,
                        const RandomStream& stream, std::optional<InflationFactor> initial) {
  validate(config);
  if (!(solver.damping > 0.0 && solver.damping <= 1.0)) throw std::invalid_argument("damping must be in (0, 1]");
  auto batch = solver_batch(law, solver.mc_inner, stream, 0);
  if (interference_free(config)) return trivial_result(config, batch);

  SolverResult out;
  out.w = initial ? *initial : InflationFactor::identity(config.t);
  double damping = solver.damping;
  double best = -std::numeric_limits<double>::infinity();

  for (int it = 1; it <= solver.max_iters; ++it) {
    if (solver.refresh_batches && it > 1) batch = solver_batch(law, solver.mc_inner, stream, it - 1);
    const double rate_prev = batch_rate(config, batch, out.w);
    best = std::max(best, rate_prev);
    const InflationFactor target = fixed_point_map(config, batch, out.w);

    InflationFactor candidate;
    double rate_cand = 0.0;
    while (true) {
      candidate.w = (1.0 - damping) * out.w.w + damping * target.w;
      rate_cand = batch_rate(config, batch, candidate);
      const bool regressed = rate_cand < rate_prev - 1e-12 * std::max(1.0, std::abs(rate_prev));
      if (!regressed || damping <= solver.damping_floor) break;
      damping = std::max(0.5 * damping, solver.damping_floor);
    }

    const double step = max_abs(candidate.w - out.w.w);
    out.w = candidate;
    out.rate_trace.push_back(rate_cand);
    out.iterations = it;
    if (rate_cand < best - kDivergenceBits) {
      throw Diverged("fixed-point iteration fell " + std::to_string(best - rate_cand) +
                     " bits below its best iterate");
    }
    best = std::max(best, rate_cand);
    if (negligible_change(rate_prev, rate_cand, solver.rel_tol) && step <= solver.rel_tol &&
        stationarity_residual(config, batch, out.w) <= kStationarityTol) {
      out.converged = true;
      break;
    }
  }
  out.rate = batch_estimate(config, batch, out.w);
  out.residual = stationarity_residual(config, batch, out.w);
  return out;
}

double reduced_objective(const ChannelConfig& config, const std::vector<CMatrix>& batch, const InflationFactor& w) {
  const CMatrix& sx = config.sigma_x.matrix();
  const CMatrix& ss = config.sigma_s.matrix();
  double acc = 0.0;
  for (const auto& h : batch) {
    const CMatrix k = h.adjoint() * inverse(received_covariance(config, h)) * h;
    const CMatrix lhs = sx + w.w * ss;
    const CMatrix s = sx + w.w * ss * w.w.adjoint() - lhs * k * lhs.adjoint();
    acc += logdet(s);
  }
  return acc / static_cast<double>(batch.size());
}

InflationFactor brute_force_w(const ChannelConfig& config, const ConditionalLaw& law, const GridSpec& grid,
                              std::size_t mc_inner, const RandomStream& stream) {
  validate(config);
  if (!(grid.step > 0.0) || !(grid.hi >= grid.lo)) throw std::invalid_argument("invalid grid");
  const auto per_axis = static_cast<std::size_t>(std::floor((grid.hi - grid.lo) / grid.step + 1e-9)) + 1;
  const double dims = static_cast<double>(config.t * config.t) * (grid.real_entries ? 1.0 : 2.0);
  const double points = std::pow(static_cast<double>(per_axis), dims);
  if (points > kMaxGridPoints) {
    throw GridTooLarge("grid has " + std::to_string(points) + " points, limit is 1e7");
  }
  const auto batch = solver_batch(law, mc_inner, stream, 0);
  bool real_data = is_real(config.sigma_x.matrix()) && is_real(config.sigma_s.matrix()) &&
                   is_real(config.sigma_z.matrix());
  for (const auto& h : batch) real_data = real_data && is_real(h);
  if (real_data && grid.real_entries) return grid_search<double>(config, batch, grid, per_axis);
  return grid_search<Complex>(config, batch, grid, per_axis);
}

}  // namespace dpc
