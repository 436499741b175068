// dpcsim: dirty paper coding simulator over the fading dirty paper channel.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpc/channel.hpp"
#include "dpc/experiments.hpp"

namespace {

struct Flags {
  std::string config;
  std::string preset;
};

// Registers every spec key as --key; values given on the command line are
// applied after the config file.
void add_spec_options(CLI::App* app, Flags& flags, std::vector<std::pair<std::string, std::string>>& raw) {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"t", "transmit antennas"},
      {"r", "receive antennas"},
      {"p-grid-db", "SNR grid in dB: list a,b,c or range lo:step:hi"},
      {"q-over-p", "interference-to-signal power ratio"},
      {"csit", "CSIT models: none, perfect, b1, b2, ..."},
      {"algorithms", "alg1, alg2, w_identity, w_zero, siso, brute"},
      {"seed", "random seed"},
      {"n-outer", "outer Monte-Carlo samples"},
      {"n-inner", "inner samples per outer sample"},
      {"fading", "real or complex"},
      {"out", "CSV output path (default: stdout)"},
      {"threads", "worker threads"},
      {"tail-points", "grid points in the scaling fit"},
      {"max-iters", "solver iteration cap"},
      {"rel-tol", "solver stopping tolerance"},
      {"mc-inner", "solver samples per expectation"},
      {"grid-step", "brute-force grid step"},
  };
  app->add_option("--config", flags.config, "key = value spec file");
  app->add_option("--preset", flags.preset, "3x2 or 3x3");
  raw.reserve(keys.size());
  for (const auto& [name, help] : keys) {
    raw.emplace_back(name, "");
    app->add_option("--" + name, raw.back().second, help);
  }
}

dpc::ExperimentSpec build_spec(const Flags& flags, const std::vector<std::pair<std::string, std::string>>& raw) {
  dpc::ExperimentSpec spec = flags.preset.empty() ? dpc::ExperimentSpec{} : dpc::preset(flags.preset);
  if (const char* env = std::getenv("DPCSIM_SEED")) dpc::apply_setting(spec, "seed", env);
  if (!flags.config.empty()) {
    std::ifstream in(flags.config);
    if (!in) throw std::runtime_error("cannot open " + flags.config);
    std::stringstream ss;
    ss << in.rdbuf();
    spec = dpc::parse_spec(ss.str(), spec);
  }
  for (const auto& [name, value] : raw) {
    if (value.empty()) continue;
    std::string key = name;
    for (auto& c : key)
      if (c == '-') c = '_';
    dpc::apply_setting(spec, key, value);
  }
  dpc::validate(spec);
  return spec;
}

void emit(const dpc::ExperimentSpec& spec, const std::string& text) {
  if (spec.out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(spec.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + spec.out);
  out << text;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirty paper coding simulator for fading channels"};
  app.require_subcommand(1);

  auto* sweep = app.add_subcommand("sweep", "rate versus SNR for every csit/algorithm cell");
  auto* scaling = app.add_subcommand("scaling", "high-SNR slope of the rate curve");
  auto* gap = app.add_subcommand("delta-r", "gap to the interference-free bound with W = I");
  auto* compare = app.add_subcommand("compare", "paired comparison of alg1 and alg2");
  auto* quant = app.add_subcommand("quantizer", "print equal-spacing quantizer tables");

  std::vector<std::vector<std::pair<std::string, std::string>>> per_cmd(4);
  std::vector<Flags> per_flags(4);
  CLI::App* cmds[] = {sweep, scaling, gap, compare};
  for (int i = 0; i < 4; ++i) add_spec_options(cmds[i], per_flags[i], per_cmd[i]);

  std::vector<int> bits{1, 2, 3, 4};
  quant->add_option("--bits", bits, "bits per component")->expected(1, 8);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (quant->parsed()) {
      for (int b : bits) std::cout << dpc::build_quantizer(b).table() << '\n';
      return 0;
    }
    int which = 0;
    for (int i = 0; i < 4; ++i)
      if (cmds[i]->parsed()) which = i;
    const dpc::ExperimentSpec spec = build_spec(per_flags[which], per_cmd[which]);
    std::vector<std::string> failures;

    if (sweep->parsed()) {
      const auto points = dpc::rate_sweep(spec);
      emit(spec, dpc::to_csv(points));
      for (const auto& p : points) {
        if (p.failed) {
          std::cerr << "cell failed: p_db=" << p.p_db << " csit=" << p.csit << " algorithm=" << p.algorithm << ": "
                    << p.error << '\n';
          failures.push_back("sweep_cell");
        } else if (p.rate > p.bound + 2.0 * std::hypot(p.std_err, p.bound_std_err)) {
          failures.push_back("bound_dominance");
        }
      }
    } else if (scaling->parsed()) {
      const auto results = dpc::scaling_check(spec, spec.tail_points);
      std::vector<dpc::CurvePoint> points;
      for (const auto& res : results) {
        points.insert(points.end(), res.points.begin(), res.points.end());
        std::cerr << "slope csit=" << res.csit << " algorithm=" << res.algorithm << ": " << fmt(res.slope)
                  << " (expected " << fmt(res.expected) << ") " << (res.pass ? "pass" : "FAIL") << '\n';
        if (!res.pass) failures.push_back("scaling[" + res.csit + "," + res.algorithm + "]");
      }
      emit(spec, dpc::to_csv(points));
    } else if (gap->parsed()) {
      const auto res = dpc::delta_r_check(spec);
      std::string text = "p_db,delta_r,std_err\n";
      for (const auto& row : res.rows) text += fmt(row.p_db) + ',' + fmt(row.delta) + ',' + fmt(row.std_err) + '\n';
      emit(spec, text);
      if (!res.nonincreasing) failures.push_back("delta_r_nonincreasing");
      if (!res.tail_small) failures.push_back("delta_r_tail");
    } else if (compare->parsed()) {
      const auto res = dpc::compare_algorithms(spec);
      std::vector<dpc::CurvePoint> points;
      for (const auto& row : res.rows) {
        points.push_back(row.alg1);
        points.push_back(row.alg2);
        std::cerr << "p_db=" << fmt(row.p_db) << " csit=" << row.csit << " gap=" << fmt(row.gap) << " se="
                  << fmt(row.gap_std_err) << " better=" << (row.gap >= 0 ? "alg1" : "alg2")
                  << (row.flagged ? " flagged" : "") << '\n';
      }
      std::cerr << "within 2 std_err: " << fmt(res.fraction_within) << '\n';
      emit(spec, dpc::to_csv(points));
    }

    for (const auto& f : failures) std::cerr << "check failed: " << f << '\n';
    return failures.empty() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
