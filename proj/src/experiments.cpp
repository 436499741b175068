#include "dpc/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dpc/errors.hpp"

namespace dpc {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(',');
    const auto item = trim(s.substr(0, pos));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(trim(v));
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw std::invalid_argument("bad number for " + std::string(key) + ": " + s);
  return x;
}

template <class Int>
Int to_int(std::string_view key, std::string_view v) {
  v = trim(v);
  Int x{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw std::invalid_argument("bad integer for " + std::string(key) + ": " + std::string(v));
  return x;
}

bool to_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("bad boolean for " + std::string(key) + ": " + std::string(v));
}

// "0,10,20" or "lo:step:hi".
std::vector<double> parse_grid(std::string_view v) {
  v = trim(v);
  if (v.find(':') != std::string_view::npos) {
    std::vector<double> parts;
    while (true) {
      const auto pos = v.find(':');
      parts.push_back(to_double("p_grid_db", v.substr(0, pos)));
      if (pos == std::string_view::npos) break;
      v.remove_prefix(pos + 1);
    }
    if (parts.size() != 3 || parts[1] <= 0.0) throw std::invalid_argument("p_grid_db range must be lo:step:hi");
    std::vector<double> grid;
    const auto n = static_cast<int>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
    for (int i = 0; i <= n; ++i) grid.push_back(parts[0] + i * parts[1]);
    return grid;
  }
  std::vector<double> grid;
  for (auto item : split_list(v)) grid.push_back(to_double("p_grid_db", item));
  return grid;
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace

std::string algorithm_label(Algorithm a) {
  switch (a) {
    case Algorithm::Alg1: return "alg1";
    case Algorithm::Alg2: return "alg2";
    case Algorithm::Identity: return "w_identity";
    case Algorithm::Zero: return "w_zero";
    case Algorithm::Siso: return "siso";
    case Algorithm::Brute: return "brute";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view label) {
  label = trim(label);
  for (auto a : {Algorithm::Alg1, Algorithm::Alg2, Algorithm::Identity, Algorithm::Zero, Algorithm::Siso,
                 Algorithm::Brute})
    if (label == algorithm_label(a)) return a;
  throw std::invalid_argument("unknown algorithm: " + std::string(label));
}

CsitModel parse_csit(std::string_view label) {
  label = trim(label);
  if (label == "none") return NoCsit{};
  if (label == "perfect") return PerfectCsit{};
  if (label.size() > 1 && (label[0] == 'b' || label[0] == 'B'))
    return QuantizedCsit{build_quantizer(to_int<int>("csit", label.substr(1)))};
  throw std::invalid_argument("unknown csit model: " + std::string(label));
}

FadingKind parse_fading(std::string_view label) {
  label = trim(label);
  if (label == "real") return RealGaussian{};
  if (label == "complex") return ComplexGaussian{};
  throw std::invalid_argument("unknown fading: " + std::string(label));
}

void validate(const ExperimentSpec& spec) {
  if (spec.t < 1 || spec.r < 1) throw std::invalid_argument("antenna counts must be positive");
  if (spec.p_grid_db.empty()) throw std::invalid_argument("p_grid_db is empty");
  if (!std::is_sorted(spec.p_grid_db.begin(), spec.p_grid_db.end()) ||
      std::adjacent_find(spec.p_grid_db.begin(), spec.p_grid_db.end()) != spec.p_grid_db.end())
    throw std::invalid_argument("p_grid_db must be strictly ascending");
  if (!(spec.q_over_p >= 0.0)) throw std::invalid_argument("q_over_p must be nonnegative");
  if (spec.csit.empty()) throw std::invalid_argument("no csit models");
  if (spec.algorithms.empty()) throw std::invalid_argument("no algorithms");
  if (spec.n_outer == 0 || spec.n_inner == 0) throw std::invalid_argument("sample counts must be positive");
  if (spec.threads == 0) throw std::invalid_argument("threads must be positive");
  if (const auto* pm = std::get_if<PointMass>(&spec.fading)) {
    if (pm->h.rows() != spec.r || pm->h.cols() != spec.t) throw DimensionMismatch("point-mass channel must be r x t");
  }
}

void apply_setting(ExperimentSpec& spec, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "t") spec.t = to_int<int>(key, value);
  else if (key == "r") spec.r = to_int<int>(key, value);
  else if (key == "p_grid_db") spec.p_grid_db = parse_grid(value);
  else if (key == "q_over_p") spec.q_over_p = to_double(key, value);
  else if (key == "csit") {
    spec.csit.clear();
    for (auto item : split_list(value)) spec.csit.push_back(parse_csit(item));
  } else if (key == "algorithms") {
    spec.algorithms.clear();
    for (auto item : split_list(value)) spec.algorithms.push_back(parse_algorithm(item));
  } else if (key == "seed") spec.seed = to_int<std::uint64_t>(key, value);
  else if (key == "n_outer") spec.n_outer = to_int<std::size_t>(key, value);
  else if (key == "n_inner") spec.n_inner = to_int<std::size_t>(key, value);
  else if (key == "fading") spec.fading = parse_fading(value);
  else if (key == "threads") spec.threads = to_int<unsigned>(key, value);
  else if (key == "tail_points") spec.tail_points = to_int<int>(key, value);
  else if (key == "out") spec.out = std::string(value);
  else if (key == "max_iters") spec.solver.max_iters = to_int<int>(key, value);
  else if (key == "rel_tol") spec.solver.rel_tol = to_double(key, value);
  else if (key == "damping") spec.solver.damping = to_double(key, value);
  else if (key == "damping_floor") spec.solver.damping_floor = to_double(key, value);
  else if (key == "mc_inner") spec.solver.mc_inner = to_int<std::size_t>(key, value);
  else if (key == "refresh_batches") spec.solver.refresh_batches = to_bool(key, value);
  else if (key == "grid_lo") spec.grid.lo = to_double(key, value);
  else if (key == "grid_hi") spec.grid.hi = to_double(key, value);
  else if (key == "grid_step") spec.grid.step = to_double(key, value);
  else if (key == "grid_real") spec.grid.real_entries = to_bool(key, value);
  else if (key == "preset") {
    const auto keep = spec;
    spec = preset(value);
    spec.out = keep.out;
  } else
    throw std::invalid_argument("unknown setting: " + std::string(key));
}

ExperimentSpec parse_spec(std::string_view text, ExperimentSpec base) {
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
    apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

ExperimentSpec preset(std::string_view name) {
  name = trim(name);
  ExperimentSpec spec;
  if (name == "3x2") return spec;
  if (name == "3x3") {
    spec.r = 3;
    return spec;
  }
  throw std::invalid_argument("unknown preset: " + std::string(name));
}

ChannelConfig cell_channel(const ExperimentSpec& spec, double p_db) {
  const double p = db_to_linear(p_db);
  return ChannelConfig::scaled_identity(spec.t, spec.r, p, spec.q_over_p * p, 1.0, spec.fading);
}

MonteCarloConfig evaluation_mc(const ExperimentSpec& spec) {
  MonteCarloConfig mc;
  mc.n_outer = spec.n_outer;
  mc.n_inner = spec.n_inner;
  mc.seed = spec.seed;
  mc.threads = spec.threads;
  return mc;
}

WPolicy make_policy(const ChannelConfig& config, Algorithm algorithm, const SolverConfig& solver,
                    const GridSpec& grid, std::uint64_t seed, std::shared_ptr<PolicyStats> stats) {
  if (algorithm == Algorithm::Identity) return constant_policy(InflationFactor::identity(config.t));
  if (algorithm == Algorithm::Zero) return constant_policy(InflationFactor::zero(config.t));

  struct Memo {
    std::mutex mutex;
    std::map<std::uint64_t, InflationFactor> cache;
  };
  auto memo = std::make_shared<Memo>();
  const RandomStream root = RandomStream(seed).substream(stream_key::kPolicy);

  return [=](const CsitObservation& obs) -> InflationFactor {
    {
      std::lock_guard lock(memo->mutex);
      if (auto it = memo->cache.find(obs.key); it != memo->cache.end()) return it->second;
    }
    const RandomStream stream = root.substream(obs.key);
    InflationFactor w;
    int iterations = 0;
    bool converged = true;
    std::optional<double> residual;
    switch (algorithm) {
      case Algorithm::Alg1: {
        auto res = algorithm1(config, obs.law, solver, stream);
        w = res.w;
        iterations = res.iterations;
        converged = res.converged;
        residual = res.residual;
        break;
      }
      case Algorithm::Alg2: {
        auto res = algorithm2(config, obs.law, solver, stream);
        w = res.w;
        iterations = res.iterations;
        converged = res.converged;
        residual = res.residual;
        break;
      }
      case Algorithm::Siso:
        w = siso_optimal_w(config, obs.law, solver.mc_inner, stream);
        break;
      case Algorithm::Brute:
        w = brute_force_w(config, obs.law, grid, solver.mc_inner, stream);
        break;
      default:
        break;
    }
    std::lock_guard lock(memo->mutex);
    const auto [it, inserted] = memo->cache.emplace(obs.key, w);
    if (inserted && stats) {
      std::lock_guard slock(stats->mutex);
      ++stats->solves;
      stats->max_iterations = std::max(stats->max_iterations, iterations);
      stats->all_converged = stats->all_converged && converged;
      if (residual) {
        stats->max_residual = stats->has_residual ? std::max(stats->max_residual, *residual) : *residual;
        stats->has_residual = true;
      }
    }
    return it->second;
  };
}

CellResult evaluate_cell(const ExperimentSpec& spec, double p_db, const CsitModel& csit, Algorithm algorithm) {
  CellResult out;
  CurvePoint& pt = out.point;
  pt.p_db = p_db;
  pt.q_over_p = spec.q_over_p;
  pt.t = spec.t;
  pt.r = spec.r;
  pt.fading = fading_label(spec.fading);
  pt.csit = csit_label(csit);
  pt.algorithm = algorithm_label(algorithm);

  const ChannelConfig config = cell_channel(spec, p_db);
  auto stats = std::make_shared<PolicyStats>();
  const WPolicy policy = make_policy(config, algorithm, spec.solver, spec.grid, spec.seed, stats);
  out.samples = sample_rate_terms(config, csit, policy, evaluation_mc(spec));

  const auto& s = out.samples;
  const double scale = config.rate_scale();
  const RateEstimate rate = summarize(s.rate, scale, s.n_inner);
  const RateEstimate bound = summarize(s.bound, scale, s.n_inner);
  std::vector<double> diff(s.rate.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = s.bound[i] - s.rate[i];

  pt.rate = rate.rate;
  pt.std_err = rate.std_error;
  pt.bound = bound.rate;
  pt.bound_std_err = bound.std_error;
  pt.delta_r = pt.bound - pt.rate;
  pt.delta_std_err = summarize(diff, scale, s.n_inner).std_error;
  pt.iterations = stats->max_iterations;
  pt.residual = stats->has_residual ? stats->max_residual : std::numeric_limits<double>::quiet_NaN();
  pt.converged = stats->all_converged;
  return out;
}

std::vector<CurvePoint> rate_sweep(const ExperimentSpec& spec) {
  validate(spec);
  std::vector<CurvePoint> points;
  for (double p_db : spec.p_grid_db) {
    for (const auto& csit : spec.csit) {
      for (auto algorithm : spec.algorithms) {
        try {
          points.push_back(evaluate_cell(spec, p_db, csit, algorithm).point);
        } catch (const std::exception& e) {
          CurvePoint pt;
          const double nan = std::numeric_limits<double>::quiet_NaN();
          pt.p_db = p_db;
          pt.q_over_p = spec.q_over_p;
          pt.t = spec.t;
          pt.r = spec.r;
          pt.fading = fading_label(spec.fading);
          pt.csit = csit_label(csit);
          pt.algorithm = algorithm_label(algorithm);
          pt.rate = pt.std_err = pt.bound = pt.bound_std_err = pt.delta_r = pt.delta_std_err = pt.residual = nan;
          pt.failed = true;
          pt.error = e.what();
          points.push_back(pt);
        }
      }
    }
  }
  return points;
}

std::string to_csv(const std::vector<CurvePoint>& points) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& p : points) {
    out += fmt(p.p_db) + ',' + fmt(p.q_over_p) + ',' + std::to_string(p.t) + ',' + std::to_string(p.r) + ',' +
           p.fading + ',' + p.csit + ',' + p.algorithm + ',' + fmt(p.rate) + ',' + fmt(p.std_err) + ',' +
           fmt(p.bound) + ',' + fmt(p.delta_r) + ',' + std::to_string(p.iterations) + ',' + fmt(p.residual) + ',' +
           (p.failed ? "failed" : p.converged ? "true" : "false") + '\n';
  }
  return out;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope needs at least two paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("slope needs distinct abscissae");
  return sxy / sxx;
}

std::vector<ScalingResult> scaling_check(const ExperimentSpec& spec, int tail_points) {
  validate(spec);
  const auto n = static_cast<int>(spec.p_grid_db.size());
  if (tail_points < 2 || tail_points > n)
    throw InsufficientTail("tail needs between 2 and " + std::to_string(n) + " grid points");
  ExperimentSpec tail = spec;
  tail.p_grid_db.assign(spec.p_grid_db.end() - tail_points, spec.p_grid_db.end());
  if (tail.p_grid_db.back() - tail.p_grid_db.front() < 20.0)
    throw InsufficientTail("tail must span at least 20 dB");

  std::vector<double> x;
  for (double db : tail.p_grid_db) x.push_back(db / 10.0 * std::numbers::log2e * std::numbers::ln10);

  const double expected = std::min(spec.t, spec.r);
  std::vector<ScalingResult> results;
  for (const auto& csit : spec.csit) {
    for (auto algorithm : spec.algorithms) {
      ScalingResult res;
      res.csit = csit_label(csit);
      res.algorithm = algorithm_label(algorithm);
      res.expected = expected;
      std::vector<double> y;
      for (double db : tail.p_grid_db) {
        res.points.push_back(evaluate_cell(tail, db, csit, algorithm).point);
        y.push_back(res.points.back().rate);
      }
      res.slope = least_squares_slope(x, y);
      res.pass = std::abs(res.slope - expected) <= 0.1 * expected;
      results.push_back(std::move(res));
    }
  }
  return results;
}

DeltaRResult delta_r_check(const ExperimentSpec& spec) {
  validate(spec);
  if (spec.t > spec.r) throw std::invalid_argument("delta-r check requires t <= r");
  DeltaRResult res;
  const auto mc = evaluation_mc(spec);
  for (double db : spec.p_grid_db) {
    const ChannelConfig config = cell_channel(spec, db);
    const GapEstimate g = delta_r(config, NoCsit{}, constant_policy(InflationFactor::identity(spec.t)), mc);
    res.rows.push_back({db, g.delta, g.delta_std_error});
  }
  res.nonincreasing = true;
  for (std::size_t i = 1; i < res.rows.size(); ++i) {
    const auto& a = res.rows[i - 1];
    const auto& b = res.rows[i];
    const double slack = 2.0 * std::hypot(a.std_err, b.std_err);
    if (b.delta > a.delta + slack) res.nonincreasing = false;
  }
  res.tail_small = res.rows.back().delta < kDeltaRTail;
  res.pass = res.nonincreasing && res.tail_small;
  return res;
}

ComparisonResult compare_algorithms(const ExperimentSpec& spec) {
  validate(spec);
  const auto has = [&](Algorithm a) {
    return std::find(spec.algorithms.begin(), spec.algorithms.end(), a) != spec.algorithms.end();
  };
  if (!has(Algorithm::Alg1) || !has(Algorithm::Alg2))
    throw std::invalid_argument("comparison needs both alg1 and alg2");

  ComparisonResult out;
  std::size_t within = 0;
  for (double db : spec.p_grid_db) {
    for (const auto& csit : spec.csit) {
      const CellResult c1 = evaluate_cell(spec, db, csit, Algorithm::Alg1);
      const CellResult c2 = evaluate_cell(spec, db, csit, Algorithm::Alg2);
      ComparisonRow row;
      row.p_db = db;
      row.csit = csit_label(csit);
      row.alg1 = c1.point;
      row.alg2 = c2.point;
      std::vector<double> diff(c1.samples.rate.size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = c1.samples.rate[i] - c2.samples.rate[i];
      const double scale = cell_channel(spec, db).rate_scale();
      row.gap = row.alg1.rate - row.alg2.rate;
      row.gap_std_err = summarize(diff, scale, c1.samples.n_inner).std_error;
      row.flagged = std::abs(row.gap) > 2.0 * row.gap_std_err;
      if (!row.flagged) ++within;
      out.rows.push_back(std::move(row));
    }
  }
  out.fraction_within = out.rows.empty() ? 0.0 : static_cast<double>(within) / static_cast<double>(out.rows.size());
  return out;
}

}  // namespace dpc
