#pragma once

// Fading dirty-paper channel Y = H(X + S) + Z: configuration, fading draws,
// the per-element CSIT quantizer and sampling of H given the transmitter's
// estimate.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dpc/numerics.hpp"
#include "dpc/random.hpp"

namespace dpc {

struct RealGaussian {};     // i.i.d. N(0, 1) entries
struct ComplexGaussian {};  // i.i.d. CN(0, 1) entries, each part N(0, 1/2)
struct PointMass {
  CMatrix h;
};
using FadingKind = std::variant<RealGaussian, ComplexGaussian, PointMass>;

std::string fading_label(const FadingKind& fading);

/// Complex signalling uses log|.| as written; real signalling halves every rate.
enum class SignalDomain { Complex, Real };

struct ChannelConfig {
  int t = 1;  // transmit antennas
  int r = 1;  // receive antennas
  double power = 1.0;  // budget P for tr(sigma_x)
  PsdMatrix sigma_x;
  PsdMatrix sigma_s;
  PsdMatrix sigma_z;
  FadingKind fading = RealGaussian{};
  SignalDomain signal = SignalDomain::Complex;

  /// sigma_x = (P/t) I, sigma_s = (Q/t) I, sigma_z = N I.
  static ChannelConfig scaled_identity(int t, int r, double p, double q, double n,
                                       FadingKind fading = RealGaussian{});

  double rate_scale() const { return signal == SignalDomain::Real ? 0.5 : 1.0; }
};

/// Throws DimensionMismatch / std::invalid_argument on a malformed config.
void validate(const ChannelConfig& config);

CMatrix sample_fading(const ChannelConfig& config, RandomStream& stream);

/// Equal-spacing quantizer for a unit Gaussian source with unbounded outer cells.
struct QuantizerSpec {
  int bits = 1;
  double step = 0.0;  // inner cell width; 0 when there are no inner cells (B = 1)
  std::vector<double> boundaries;  // ascending, 2^B - 1 entries
  std::vector<double> levels;      // 2^B reconstruction points
  double mse = 0.0;

  std::size_t cells() const { return levels.size(); }
  /// Index of the cell containing x; a value on a boundary belongs to the upper cell.
  std::size_t cell_of(double x) const;
  double quantize(double x) const { return levels[cell_of(x)]; }
  std::pair<double, double> cell_bounds(std::size_t cell) const;

  /// Plain-text table (bits, step, mse, then one line per cell).
  std::string table() const;
};

/// Minimum-MSE equal-spacing quantizer for N(0, 1), 1 <= bits <= 8.
QuantizerSpec build_quantizer(int bits);

/// Exact mean-squared error of the uniform quantizer with the given step
/// (inner levels at midpoints, outer levels at the tail conditional means).
double uniform_quantizer_mse(int bits, double step);

double quantizer_mse(const QuantizerSpec& spec);

struct PerfectCsit {};
struct NoCsit {};
struct QuantizedCsit {
  QuantizerSpec spec;
};
using CsitModel = std::variant<PerfectCsit, NoCsit, QuantizedCsit>;

std::string csit_label(const CsitModel& csit);

/// Transmitter's quantized view of H: one cell per real dimension.
struct QuantizedChannel {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool complex_entries = false;
  double component_scale = 1.0;  // std-dev of each quantized real component
  std::vector<int> cells;        // row-major; (re, im) interleaved when complex
  CMatrix reconstruction;

  std::uint64_t key() const;
};

QuantizedChannel quantize(const CMatrix& h, const QuantizerSpec& spec, const FadingKind& fading);

/// Draw H | H-hat: each component from a normal truncated to its cell (inverse CDF).
CMatrix sample_conditional(const QuantizedChannel& hhat, const QuantizerSpec& spec,
                           RandomStream& stream);

/// The law of H given what the transmitter knows.
class ConditionalLaw {
 public:
  static ConditionalLaw point_mass(CMatrix h);
  static ConditionalLaw marginal(const ChannelConfig& config);
  static ConditionalLaw quantized(QuantizedChannel hhat, QuantizerSpec spec);

  CMatrix draw(RandomStream& stream) const;
  /// n draws, or a single draw when the law is a point mass.
  std::vector<CMatrix> batch(std::size_t n, RandomStream& stream) const;
  bool degenerate() const;

 private:
  struct Marginal {
    ChannelConfig config;
  };
  struct Cell {
    QuantizedChannel hhat;
    QuantizerSpec spec;
  };
  using Law = std::variant<PointMass, Marginal, Cell>;
  explicit ConditionalLaw(Law law) : law_(std::move(law)) {}
  Law law_;
};

/// Everything the transmitter learns about one channel realisation.
struct CsitObservation {
  ConditionalLaw law;
  std::optional<CMatrix> estimate;  // H-hat when one exists
  std::uint64_t key = 0;            // equal keys imply equal laws
};

CsitObservation observe(const ChannelConfig& config, const CsitModel& csit, const CMatrix& h);

}  // namespace dpc
