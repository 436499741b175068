#include "dpc/rate.hpp"

#include <cmath>
#include <exception>
#include <numbers>
#include <string>
#include <thread>

#include "dpc/errors.hpp"

namespace dpc {

namespace {

void check_dims(const ChannelConfig& config, const InflationFactor& w, const CMatrix& h) {
  if (w.w.rows() != config.t || w.w.cols() != config.t) {
    throw DimensionMismatch("inflation factor must be " + std::to_string(config.t) + "x" +
                            std::to_string(config.t));
  }
  if (h.rows() != config.r || h.cols() != config.t) {
    throw DimensionMismatch("fading matrix must be " + std::to_string(config.r) + "x" +
                            std::to_string(config.t));
  }
}

// Runs body(i) for i in [0, n) on up to `threads` workers with contiguous
// chunks. The first exception by index order is rethrown.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end, w] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

RateSamples run_samples(const ChannelConfig& config, const CsitModel& csit, const WPolicy* policy,
                        const MonteCarloConfig& mc) {
  validate(config);
  if (mc.n_outer == 0 || mc.n_inner == 0) throw std::invalid_argument("Monte-Carlo sample counts must be positive");

  RateSamples out;
  out.bound.resize(mc.n_outer);
  if (policy) out.rate.resize(mc.n_outer);
  std::vector<std::size_t> used(mc.n_outer, 0);

  const RandomStream root = RandomStream(mc.seed).substream(stream_key::kOuter);
  parallel_for(mc.n_outer, mc.threads, [&](std::size_t i) {
    const RandomStream sample = root.substream(i);
    RandomStream truth = sample.substream(0);
    RandomStream inner = sample.substream(1);
    const CMatrix h = sample_fading(config, truth);
    const CsitObservation obs = observe(config, csit, h);
    const auto draws = obs.law.batch(mc.n_inner, inner);
    std::optional<InflationFactor> w;
    if (policy) w = (*policy)(obs);

    double rate_acc = 0.0;
    double bound_acc = 0.0;
    for (const auto& hd : draws) {
      bound_acc += bound_integrand(config, hd);
      if (w) rate_acc += rate_integrand(config, *w, hd);
    }
    const double n = static_cast<double>(draws.size());
    out.bound[i] = bound_acc / n;
    if (w) out.rate[i] = rate_acc / n;
    used[i] = draws.size();
  });
  out.n_inner = used.empty() ? 0 : used.front();
  return out;
}

}  // namespace

BlockMatrixM::RowPartition BlockMatrixM::partition_for_row(int k) const {
  if (k < 0 || k >= t) throw DimensionMismatch("row index outside the U block");
  RowPartition p;
  p.order.reserve(static_cast<std::size_t>(t + r));
  p.order.push_back(k);
  for (int i = 0; i < t + r; ++i)
    if (i != k) p.order.push_back(i);
  const Eigen::Index n = t + r - 1;
  p.a = full(k, k);
  p.b.resize(n);
  p.d.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto oi = p.order[static_cast<std::size_t>(i + 1)];
    p.b(i) = full(oi, k);
    for (Eigen::Index j = 0; j < n; ++j) p.d(i, j) = full(oi, p.order[static_cast<std::size_t>(j + 1)]);
  }
  return p;
}

DInverseBlocks split_d_inverse(const CMatrix& d_inverse, int t) {
  const Eigen::Index u = t - 1;
  const Eigen::Index r = d_inverse.rows() - u;
  return {d_inverse.topLeftCorner(u, u), d_inverse.topRightCorner(u, r), d_inverse.bottomLeftCorner(r, u),
          d_inverse.bottomRightCorner(r, r)};
}

BlockMatrixM assemble_m(const ChannelConfig& config, const InflationFactor& w, const CMatrix& h) {
  check_dims(config, w, h);
  const CMatrix& sx = config.sigma_x.matrix();
  const CMatrix& ss = config.sigma_s.matrix();
  const CMatrix ws = w.w * ss;
  const CMatrix cross = (sx + ws) * h.adjoint();

  BlockMatrixM m;
  m.t = config.t;
  m.r = config.r;
  m.full.resize(config.t + config.r, config.t + config.r);
  m.full.topLeftCorner(config.t, config.t) = sx + ws * w.w.adjoint();
  m.full.topRightCorner(config.t, config.r) = cross;
  m.full.bottomLeftCorner(config.r, config.t) = cross.adjoint();
  m.full.bottomRightCorner(config.r, config.r) = received_covariance(config, h);
  return m;
}

CMatrix received_covariance(const ChannelConfig& config, const CMatrix& h) {
  return h * (config.sigma_x.matrix() + config.sigma_s.matrix()) * h.adjoint() + config.sigma_z.matrix();
}

double rate_integrand(const ChannelConfig& config, const InflationFactor& w, const CMatrix& h) {
  const BlockMatrixM m = assemble_m(config, w, h);
  return logdet(config.sigma_x.matrix()) + logdet(m.bottom_right()) - logdet(m.full);
}

double bound_integrand(const ChannelConfig& config, const CMatrix& h) {
  const CMatrix& sz = config.sigma_z.matrix();
  return logdet(sz + h * config.sigma_x.matrix() * h.adjoint()) - logdet(sz);
}

WPolicy constant_policy(InflationFactor w) {
  return [w = std::move(w)](const CsitObservation&) { return w; };
}

RateSamples sample_rate_terms(const ChannelConfig& config, const CsitModel& csit, const WPolicy& policy,
                              const MonteCarloConfig& mc) {
  return run_samples(config, csit, &policy, mc);
}

RateEstimate summarize(const std::vector<double>& nats, double rate_scale, std::size_t n_inner) {
  RateEstimate e;
  e.n_outer = nats.size();
  e.n_inner = n_inner;
  if (nats.empty()) return e;
  const double n = static_cast<double>(nats.size());
  double mean = 0.0;
  for (double v : nats) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : nats) ss += (v - mean) * (v - mean);
  const double to_bits = rate_scale / std::numbers::ln2;
  e.rate = mean * to_bits;
  e.std_error = nats.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) * to_bits : 0.0;
  return e;
}

RateEstimate achievable_rate(const ChannelConfig& config, const CsitModel& csit, const WPolicy& policy,
                             const MonteCarloConfig& mc) {
  const auto s = run_samples(config, csit, &policy, mc);
  return summarize(s.rate, config.rate_scale(), s.n_inner);
}

RateEstimate no_interference_bound(const ChannelConfig& config, const MonteCarloConfig& mc) {
  const auto s = run_samples(config, NoCsit{}, nullptr, mc);
  return summarize(s.bound, config.rate_scale(), s.n_inner);
}

GapEstimate delta_r(const ChannelConfig& config, const CsitModel& csit, const WPolicy& policy,
                    const MonteCarloConfig& mc) {
  const auto s = run_samples(config, csit, &policy, mc);
  GapEstimate g;
  g.rate = summarize(s.rate, config.rate_scale(), s.n_inner);
  g.bound = summarize(s.bound, config.rate_scale(), s.n_inner);
  std::vector<double> diff(s.rate.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = s.bound[i] - s.rate[i];
  g.delta = g.bound.rate - g.rate.rate;
  g.delta_std_error = summarize(diff, config.rate_scale(), s.n_inner).std_error;
  return g;
}

}  // namespace dpc
