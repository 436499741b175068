#include "dpc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/minima.hpp>

#include "dpc/errors.hpp"

namespace dpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const boost::math::normal kStdNormal(0.0, 1.0);

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double pdf(double x) { return std::isinf(x) ? 0.0 : boost::math::pdf(kStdNormal, x); }

// P(lo <= X < hi) for X ~ N(0,1), using the tail that keeps precision.
double mass(double lo, double hi) {
  if (lo >= 0.0) {
    const double a = std::isinf(lo) ? 0.0 : boost::math::cdf(boost::math::complement(kStdNormal, lo));
    const double b = std::isinf(hi) ? 0.0 : boost::math::cdf(boost::math::complement(kStdNormal, hi));
    return a - b;
  }
  if (hi <= 0.0) return mass(-hi, -lo);
  return 1.0 - mass(-kInf, lo) - mass(hi, kInf);
}

// x * pdf(x) with the limit 0 at +-infinity.
double xpdf(double x) { return std::isinf(x) ? 0.0 : x * pdf(x); }

// Contribution of one cell with reconstruction level c to E(x - q(x))^2.
double cell_mse(double lo, double hi, double c) {
  const double m0 = mass(lo, hi);
  const double m1 = pdf(lo) - pdf(hi);
  const double m2 = m0 + xpdf(lo) - xpdf(hi);
  return m2 - 2.0 * c * m1 + c * c * m0;
}

double tail_mean_upper(double b) { return pdf(b) / mass(b, kInf); }

std::vector<double> uniform_boundaries(int bits, double step) {
  const int n = 1 << bits;
  std::vector<double> out(static_cast<std::size_t>(n - 1));
  for (int i = 1; i < n; ++i) out[static_cast<std::size_t>(i - 1)] = (i - n / 2) * step;
  return out;
}

std::vector<double> uniform_levels(const std::vector<double>& boundaries) {
  const std::size_t n = boundaries.size() + 1;
  std::vector<double> levels(n);
  levels.front() = -tail_mean_upper(-boundaries.front());
  levels.back() = tail_mean_upper(boundaries.back());
  for (std::size_t i = 1; i + 1 < n; ++i) levels[i] = 0.5 * (boundaries[i - 1] + boundaries[i]);
  return levels;
}

double mse_of(const std::vector<double>& boundaries, const std::vector<double>& levels) {
  double total = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double lo = i == 0 ? -kInf : boundaries[i - 1];
    const double hi = i + 1 == levels.size() ? kInf : boundaries[i];
    total += cell_mse(lo, hi, levels[i]);
  }
  return total;
}

// Standard normal restricted to [lo, hi), by inverse CDF on the tail nearest the cell.
double truncated_normal(double lo, double hi, double u) {
  if (lo >= 0.0) {
    const double a = std::isinf(lo) ? 1.0 : boost::math::cdf(boost::math::complement(kStdNormal, lo));
    const double b = std::isinf(hi) ? 0.0 : boost::math::cdf(boost::math::complement(kStdNormal, hi));
    const double p = b + u * (a - b);
    return boost::math::quantile(boost::math::complement(kStdNormal, p));
  }
  if (hi <= 0.0) return -truncated_normal(-hi, -lo, u);
  const double a = boost::math::cdf(kStdNormal, lo);
  const double b = boost::math::cdf(kStdNormal, hi);
  return boost::math::quantile(kStdNormal, a + u * (b - a));
}

std::uint64_t hash_doubles(const CMatrix& h) {
  std::uint64_t acc = mix64(static_cast<std::uint64_t>(h.rows()) * 131 + static_cast<std::uint64_t>(h.cols()));
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      for (double part : {h(i, j).real(), h(i, j).imag()}) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &part, sizeof bits);
        acc = mix64(acc ^ bits);
      }
    }
  }
  return acc;
}

}  // namespace

std::string fading_label(const FadingKind& fading) {
  return std::visit(overloaded{[](const RealGaussian&) { return std::string("real"); },
                               [](const ComplexGaussian&) { return std::string("complex"); },
                               [](const PointMass&) { return std::string("point"); }},
                    fading);
}

ChannelConfig ChannelConfig::scaled_identity(int t, int r, double p, double q, double n,
                                             FadingKind fading) {
  if (t < 1 || r < 1) throw DimensionMismatch("antenna counts must be positive");
  ChannelConfig c;
  c.t = t;
  c.r = r;
  c.power = p;
  c.sigma_x = PsdMatrix::scaled_identity(t, p / t);
  c.sigma_s = PsdMatrix::scaled_identity(t, q / t);
  c.sigma_z = PsdMatrix::scaled_identity(r, n);
  c.fading = std::move(fading);
  validate(c);
  return c;
}

void validate(const ChannelConfig& c) {
  if (c.t < 1 || c.r < 1) throw DimensionMismatch("antenna counts must be positive");
  if (c.sigma_x.size() != c.t || c.sigma_s.size() != c.t || c.sigma_z.size() != c.r) {
    throw DimensionMismatch("covariance sizes do not match (t, r)");
  }
  if (c.sigma_x.trace() > c.power * (1.0 + 1e-12) + 1e-300) {
    throw std::invalid_argument("tr(sigma_x) exceeds the power budget");
  }
  const auto z = psd_spectral(c.sigma_z);
  if (!(z.eigenvalues.back() > 0.0)) throw std::invalid_argument("sigma_z must be positive definite");
  if (const auto* pm = std::get_if<PointMass>(&c.fading)) {
    if (pm->h.rows() != c.r || pm->h.cols() != c.t) {
      throw DimensionMismatch("point-mass fading matrix must be r x t");
    }
  }
}

CMatrix sample_fading(const ChannelConfig& config, RandomStream& stream) {
  return std::visit(
      overloaded{[&](const RealGaussian&) {
                   CMatrix h(config.r, config.t);
                   for (Eigen::Index i = 0; i < h.rows(); ++i)
                     for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) = Complex(stream.normal(), 0.0);
                   return h;
                 },
                 [&](const ComplexGaussian&) {
                   const double s = std::sqrt(0.5);
                   CMatrix h(config.r, config.t);
                   for (Eigen::Index i = 0; i < h.rows(); ++i)
                     for (Eigen::Index j = 0; j < h.cols(); ++j) {
                       const double re = stream.normal();
                       const double im = stream.normal();
                       h(i, j) = Complex(s * re, s * im);
                     }
                   return h;
                 },
                 [&](const PointMass& pm) { return pm.h; }},
      config.fading);
}

std::size_t QuantizerSpec::cell_of(double x) const {
  return static_cast<std::size_t>(std::upper_bound(boundaries.begin(), boundaries.end(), x) -
                                  boundaries.begin());
}

std::pair<double, double> QuantizerSpec::cell_bounds(std::size_t cell) const {
  const double lo = cell == 0 ? -kInf : boundaries[cell - 1];
  const double hi = cell + 1 >= cells() ? kInf : boundaries[cell];
  return {lo, hi};
}

std::string QuantizerSpec::table() const {
  std::ostringstream os;
  os.precision(12);
  os << "# bits = " << bits << "\n# step = " << step << "\n# mse = " << mse << "\n";
  os << "cell,lower,upper,level\n";
  for (std::size_t i = 0; i < cells(); ++i) {
    const auto [lo, hi] = cell_bounds(i);
    os << i << ',' << lo << ',' << hi << ',' << levels[i] << '\n';
  }
  return os.str();
}

double uniform_quantizer_mse(int bits, double step) {
  const auto b = uniform_boundaries(bits, step);
  return mse_of(b, uniform_levels(b));
}

double quantizer_mse(const QuantizerSpec& spec) { return mse_of(spec.boundaries, spec.levels); }

QuantizerSpec build_quantizer(int bits) {
  if (bits < 1 || bits > 8) throw std::invalid_argument("quantizer bits must be in [1, 8]");
  QuantizerSpec spec;
  spec.bits = bits;
  if (bits == 1) {
    spec.step = 0.0;
  } else {
    // the last inner boundary sits at (2^(B-1) - 1) * step; 6 sigma is ample
    const double hi = 6.0 / ((1 << (bits - 1)) - 1);
    const auto [step, mse] = boost::math::tools::brent_find_minima(
        [bits](double s) { return uniform_quantizer_mse(bits, s); }, 1e-4, hi,
        std::numeric_limits<double>::digits / 2);
    spec.step = step;
  }
  spec.boundaries = uniform_boundaries(bits, spec.step);
  spec.levels = uniform_levels(spec.boundaries);
  spec.mse = mse_of(spec.boundaries, spec.levels);
  return spec;
}

std::string csit_label(const CsitModel& csit) {
  return std::visit(overloaded{[](const PerfectCsit&) { return std::string("perfect"); },
                               [](const NoCsit&) { return std::string("none"); },
                               [](const QuantizedCsit& q) { return "b" + std::to_string(q.spec.bits); }},
                    csit);
}

std::uint64_t QuantizedChannel::key() const {
  std::uint64_t acc = mix64(static_cast<std::uint64_t>(rows) * 977 + static_cast<std::uint64_t>(cols) * 31 +
                            (complex_entries ? 1 : 0));
  for (int c : cells) acc = mix64(acc ^ static_cast<std::uint64_t>(c + 1));
  return acc;
}

QuantizedChannel quantize(const CMatrix& h, const QuantizerSpec& spec, const FadingKind& fading) {
  QuantizedChannel out;
  if (std::holds_alternative<PointMass>(fading)) {
    throw std::invalid_argument("quantized CSIT needs fading with independent Gaussian entries");
  }
  out.complex_entries = std::holds_alternative<ComplexGaussian>(fading);
  out.component_scale = out.complex_entries ? std::sqrt(0.5) : 1.0;
  out.rows = h.rows();
  out.cols = h.cols();
  out.reconstruction.resize(h.rows(), h.cols());
  const double s = out.component_scale;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      const auto re = spec.cell_of(h(i, j).real() / s);
      out.cells.push_back(static_cast<int>(re));
      double im_level = 0.0;
      if (out.complex_entries) {
        const auto im = spec.cell_of(h(i, j).imag() / s);
        out.cells.push_back(static_cast<int>(im));
        im_level = spec.levels[im] * s;
      }
      out.reconstruction(i, j) = Complex(spec.levels[re] * s, im_level);
    }
  }
  return out;
}

CMatrix sample_conditional(const QuantizedChannel& hhat, const QuantizerSpec& spec, RandomStream& stream) {
  CMatrix h(hhat.rows, hhat.cols);
  const double s = hhat.component_scale;
  std::size_t k = 0;
  auto draw = [&](int cell) {
    const auto [lo, hi] = spec.cell_bounds(static_cast<std::size_t>(cell));
    return s * truncated_normal(lo, hi, stream.uniform());
  };
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      const double re = draw(hhat.cells[k++]);
      const double im = hhat.complex_entries ? draw(hhat.cells[k++]) : 0.0;
      h(i, j) = Complex(re, im);
    }
  }
  return h;
}

ConditionalLaw ConditionalLaw::point_mass(CMatrix h) { return ConditionalLaw(PointMass{std::move(h)}); }

ConditionalLaw ConditionalLaw::marginal(const ChannelConfig& config) {
  if (const auto* pm = std::get_if<PointMass>(&config.fading)) return point_mass(pm->h);
  return ConditionalLaw(Marginal{config});
}

ConditionalLaw ConditionalLaw::quantized(QuantizedChannel hhat, QuantizerSpec spec) {
  return ConditionalLaw(Cell{std::move(hhat), std::move(spec)});
}

CMatrix ConditionalLaw::draw(RandomStream& stream) const {
  return std::visit(overloaded{[](const PointMass& pm) { return pm.h; },
                               [&](const Marginal& m) { return sample_fading(m.config, stream); },
                               [&](const Cell& c) { return sample_conditional(c.hhat, c.spec, stream); }},
                    law_);
}

std::vector<CMatrix> ConditionalLaw::batch(std::size_t n, RandomStream& stream) const {
  const std::size_t count = degenerate() ? std::min<std::size_t>(n, 1) : n;
  std::vector<CMatrix> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(draw(stream));
  return out;
}

bool ConditionalLaw::degenerate() const { return std::holds_alternative<PointMass>(law_); }

CsitObservation observe(const ChannelConfig& config, const CsitModel& csit, const CMatrix& h) {
  return std::visit(
      overloaded{[&](const PerfectCsit&) {
                   return CsitObservation{ConditionalLaw::point_mass(h), h, hash_doubles(h)};
                 },
                 [&](const NoCsit&) {
                   return CsitObservation{ConditionalLaw::marginal(config), std::nullopt, 0};
                 },
                 [&](const QuantizedCsit& q) {
                   auto hhat = quantize(h, q.spec, config.fading);
                   CMatrix estimate = hhat.reconstruction;
                   const auto key = hhat.key();
                   return CsitObservation{ConditionalLaw::quantized(std::move(hhat), q.spec),
                                          std::move(estimate), key};
                 }},
      csit);
}

}  // namespace dpc
