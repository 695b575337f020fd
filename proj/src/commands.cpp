#include "qdkmc/commands.hpp"

#include "qdkmc/analytic.hpp"
#include "qdkmc/csv.hpp"
#include "qdkmc/ctmc.hpp"
#include "qdkmc/fit.hpp"
#include "qdkmc/observables.hpp"
#include "qdkmc/sweep.hpp"
#include "qdkmc/version.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>

namespace qdkmc {

namespace {

namespace fs = std::filesystem;
using csv::format;

fs::path prepare(const RunConfig& config)
{
  fs::create_directories(config.output_dir);
  return config.output_dir;
}

AccumulatorSet accumulate(const RunConfig& config, bool g2, bool blink)
{
  ObservableSettings s = config.observable_settings();
  s.track_g2 = g2;
  s.track_blink = blink && s.track_blink;
  return run_trajectory(config.rates, config.schedule(), config.seed, AccumulatorSet(s),
                        config.n_levels);
}

void write_fit_rows(csv::Writer& w, const FitPair& fits)
{
  for (const FitResult* f : {&fits.single, &fits.dual})
    w.row({std::to_string(f->order), format(f->curve.gamma_fast), format(f->curve.gamma_slow),
           format(f->curve.a_fast), format(f->curve.a_slow), format(f->residual),
           format(f->order == 2 ? fits.improvement : 0.0)});
}

void print_fit(std::ostream& out, const char* what, const FitPair& fits, const char* unit)
{
  out << what << " single: gamma=" << format(fits.single.curve.gamma_fast) << ' ' << unit
      << "  residual=" << format(fits.single.residual) << '\n'
      << what << " double: gamma_fast=" << format(fits.dual.curve.gamma_fast)
      << " gamma_slow=" << format(fits.dual.curve.gamma_slow) << ' ' << unit
      << "  residual=" << format(fits.dual.residual)
      << "  improvement=" << format(fits.improvement) << '\n';
}

}  // namespace

void write_manifest(const RunConfig& config, const std::string& command,
                    const std::vector<std::string>& outputs)
{
  nlohmann::ordered_json j;
  j["tool"] = "qdkmc";
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = config.seed;
  // the manifest sits in output_dir; leaving it out keeps reruns elsewhere byte-identical
  auto echo = config.echo();
  echo["run"].erase("output_dir");
  j["config"] = echo;
  j["outputs"] = outputs;
  std::ofstream out(config.output_dir / (command + ".manifest.json"), std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out)
    throw std::runtime_error("cannot write manifest in " + config.output_dir.string());
}

int cmd_decay(const RunConfig& config, const CommandOptions&, CommandIo io)
{
  const fs::path dir = prepare(config);
  const AccumulatorSet acc = accumulate(config, false, false);
  const std::optional<double> p_in =
      !config.resonant && config.p_in > 0 ? std::optional(config.p_in) : std::nullopt;
  const DecayCurve curve = decay_histogram(acc, p_in);
  std::vector<std::string> written;
  io.out << "eta_qe_x = " << format(config.rates.quantum_efficiency())
         << ", with Purcell = " << format(config.rates.quantum_efficiency_purcell()) << '\n';

  {
    csv::Writer w(dir / "decay.csv", {"t_ns", "counts", "normalized"});
    for (std::size_t i = 0; i < curve.t_ns.size(); ++i)
      w.row({format(curve.t_ns[i]), format(curve.counts[i]), format(curve.normalized[i])});
    w.flush();
    written.push_back("decay.csv");
  }
  {
    // Same normalization as decay.csv: photons per ns per injected pair (per
    // pulse for resonant excitation), averaged over each bin.
    const auto density = config.resonant
                             ? resonant_emission_density(config.rates)
                             : nonresonant_emission_density(config.rates, config.period_ns);
    const double b = config.observables.decay_bin_ns;
    csv::Writer w(dir / "decay_analytic.csv", {"t_ns", "normalized"});
    for (std::size_t i = 0; i < curve.t_ns.size(); ++i) {
      const double lo = static_cast<double>(i) * b;
      const double hi = std::min(lo + b, config.period_ns);
      w.row({format(curve.t_ns[i]), format(density.bin_average(lo, hi))});
    }
    w.flush();
    written.push_back("decay_analytic.csv");
  }

  io.out << "cycles: " << acc.n_cycles_seen()
         << "  X photons: " << acc.class_count(ExcitonClass::X) << '\n';
  std::vector<double> y(curve.counts.begin(), curve.counts.end());
  FitPair fits;
  try {
    fits = fit_both(curve.t_ns, y);
  } catch (const FitError& e) {
    io.err << "decay: fit refused: " << e.what() << '\n';
    write_manifest(config, "decay", written);
    return kExitFitRefused;
  }
  csv::Writer w(dir / "decay_fit.csv", {"order", "gamma_fast_per_ns", "gamma_slow_per_ns",
                                        "a_fast", "a_slow", "residual", "improvement"});
  write_fit_rows(w, fits);
  w.flush();
  written.push_back("decay_fit.csv");
  print_fit(io.out, "decay", fits, "ns^-1");
  write_manifest(config, "decay", written);
  return kExitOk;
}

int cmd_g2(const RunConfig& config, const CommandOptions&, CommandIo io)
{
  const fs::path dir = prepare(config);
  const AccumulatorSet acc = accumulate(config, true, false);
  const G2Curve g2 = g2_correlate(acc, G2Normalization::Plateau);
  csv::Writer w(dir / "g2.csv", {"tau_ns", "raw", "normalized"});
  for (std::size_t i = 0; i < g2.tau_ns.size(); ++i)
    w.row({format(g2.tau_ns[i]), format(g2.raw[i]), format(g2.normalized[i])});
  w.flush();

  const std::size_t zero = g2.tau_ns.size() / 2;
  io.out << "plateau: " << format(g2.plateau) << "  g2(0): " << format(g2.normalized[zero])
         << '\n';
  write_manifest(config, "g2", {"g2.csv"});
  return kExitOk;
}

int cmd_blink(const RunConfig& config, const CommandOptions&, CommandIo io)
{
  const fs::path dir = prepare(config);
  RunConfig c = config;
  c.observables.track_blink = true;
  const AccumulatorSet acc = accumulate(c, false, true);
  std::vector<std::string> written;
  {
    csv::Writer w(dir / "blink.csv", {"run_length_periods", "count"});
    for (const auto& [len, n] : acc.blink_hist())
      w.row({format(len), format(n)});
    w.flush();
    written.push_back("blink.csv");
  }
  FitPair fits;
  try {
    fits = fit_blink(acc.blink_hist());
  } catch (const FitError& e) {
    io.err << "blink: fit refused: " << e.what() << '\n';
    write_manifest(config, "blink", written);
    return kExitFitRefused;
  }
  csv::Writer w(dir / "blink_fit.csv", {"order", "gamma_fast_per_period", "gamma_slow_per_period",
                                        "a_fast", "a_slow", "residual", "improvement"});
  write_fit_rows(w, fits);
  w.flush();
  written.push_back("blink_fit.csv");
  print_fit(io.out, "blink", fits, "per period");
  write_manifest(config, "blink", written);
  return kExitOk;
}

int cmd_sweep(const RunConfig& config, const CommandOptions& options, CommandIo io)
{
  const fs::path dir = prepare(config);
  const GridSpec grid = config.grid();
  SweepOptions so;
  so.workers = options.workers;
  so.log_path = dir / "sweep.csv";
  so.resume = options.resume;
  if (options.progress)
    so.progress = [&io](std::size_t done, std::size_t total) {
      io.err << "sweep: " << done << '/' << total << " points\n";
    };
  const SweepResult res = run_sweep(grid, so);
  io.out << "sweep: " << res.points.size() << " of " << grid.size() << " points in sweep.csv\n";
  write_manifest(config, "sweep", {"sweep.csv", "sweep.csv.manifest.json"});
  return kExitOk;
}

int cmd_saturation(const RunConfig& config, const CommandOptions& options, CommandIo io)
{
  if (config.resonant)
    throw ConfigError("saturation: needs scheme = nonresonant");
  const fs::path dir = prepare(config);
  SweepOptions so;
  so.workers = options.workers;
  const auto points = saturation_scan(config.saturation_p_in, config.rates, config.period_ns,
                                      config.n_cycles, config.seed, so, config.n_levels);
  csv::Writer w(dir / "saturation.csv", {"p_in", "p_x", "stderr_x", "p_xx", "stderr_xx"});
  for (const auto& p : points)
    w.row({format(p.p_in), format(p.p_x), format(p.se_x), format(p.p_xx), format(p.se_xx)});
  w.flush();
  io.out << "saturation: " << points.size() << " points\n";
  write_manifest(config, "saturation", {"saturation.csv"});
  return kExitOk;
}

namespace {

struct Check {
  std::string name;
  double expected;
  double measured;
  double sigma;

  double z() const { return sigma > 0 ? (measured - expected) / sigma : (measured == expected ? 0 : INFINITY); }
  bool pass(double limit) const { return std::abs(z()) <= limit; }
};

}  // namespace

int cmd_validate(const RunConfig& config, const CommandOptions& options, CommandIo io)
{
  const fs::path dir = prepare(config);
  std::vector<Check> checks;

  // Stochastic solver vs exact chain, X photons per cycle.
  {
    GridSpec grid;
    grid.gamma_r = config.rates.gamma_r;
    grid.axes.gamma_nr = {config.rates.gamma_nr};
    grid.axes.gamma_sf = {config.rates.gamma_sf};
    grid.axes.purcell = {config.rates.purcell};
    grid.axes.period_t = {config.period_ns};
    grid.cycles_per_point = config.n_cycles;
    grid.seed_base = config.seed;
    SweepOptions so;
    so.workers = options.workers;
    const std::vector<std::pair<std::string, Scheme>> schemes = {
        {"resonant", Resonant{config.polarization}},
        {"nonresonant p_in=0.1", NonResonant{0.1}},
        {"nonresonant p_in=1.5", NonResonant{1.5}}};
    for (int levels : {1, 2}) {
      for (const auto& [label, scheme] : schemes) {
        grid.n_levels = levels;
        grid.scheme = scheme;
        grid.axes.p_in = {is_resonant(scheme) ? 0.0 : std::get<NonResonant>(scheme).p_in};
        const PointResult r = run_sweep(grid, so).points.front();
        const double exact =
            ctmc_emission_probability(config.rates, scheme, config.period_ns, levels)[ExcitonClass::X];
        checks.push_back({"ctmc n_levels=" + std::to_string(levels) + " " + label, exact,
                          r.p(ExcitonClass::X), r.se(ExcitonClass::X)});
      }
    }
  }

  // Low-power decay curve vs the analytic bright/dark solution, 1 ns bins.
  {
    RunConfig c = config;
    c.resonant = false;
    c.p_in = 0.01;
    c.observables.decay_bin_ns = 1.0;
    const AccumulatorSet acc = accumulate(c, false, false);
    const auto density = nonresonant_emission_density(c.rates, c.period_ns);
    const auto& hist = acc.decay_hist();
    const double pairs = static_cast<double>(acc.n_cycles_seen()) * c.p_in;
    for (std::size_t i = 0; i < hist.size(); ++i) {
      const double lo = static_cast<double>(i);
      const double hi = std::min(lo + 1.0, c.period_ns);
      const double expected = pairs * (hi - lo) * density.bin_average(lo, hi);
      checks.push_back({"analytic decay bin " + format(lo) + "-" + format(hi) + " ns", expected,
                        static_cast<double>(hist[i]), std::sqrt(std::max(expected, 1.0))});
    }
  }

  // Error-bar calibration: spread of 20 independent estimates vs their
  // reported standard errors.
  double calibration = 0;
  {
    GridSpec grid = config.grid();
    grid.axes = GridAxes{{config.rates.gamma_nr}, {config.rates.gamma_sf}, {config.rates.purcell},
                         {config.period_ns}, {config.resonant ? 0.0 : config.p_in}};
    grid.cycles_per_point = std::max<std::uint64_t>(config.n_cycles / 10, 1000);
    std::vector<double> p, se;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
      grid.seed_base = stream_seed(config.seed, 1000 + rep);
      const PointResult r = run_sweep(grid).points.front();
      p.push_back(r.p(ExcitonClass::X));
      se.push_back(r.se(ExcitonClass::X));
    }
    const double mean = std::accumulate(p.begin(), p.end(), 0.0) / 20.0;
    double ss = 0;
    for (double v : p)
      ss += (v - mean) * (v - mean);
    const double spread = std::sqrt(ss / 19.0);
    const double typical = std::accumulate(se.begin(), se.end(), 0.0) / 20.0;
    calibration = typical > 0 ? spread / typical : 0;
  }

  bool ok = true;
  csv::Writer w(dir / "validate.csv", {"check", "expected", "measured", "sigma", "z", "pass"});
  for (const auto& c : checks) {
    const bool pass = c.pass(3.0);
    ok = ok && pass;
    w.row({c.name, format(c.expected), format(c.measured), format(c.sigma), format(c.z()),
           pass ? "1" : "0"});
    io.out << (pass ? "PASS " : "FAIL ") << c.name << ": expected " << format(c.expected)
           << ", measured " << format(c.measured) << " (z=" << format(c.z()) << ")\n";
  }
  const bool calibrated = calibration >= 1 / 1.5 && calibration <= 1.5;
  ok = ok && calibrated;
  w.row({"error-bar calibration (spread / stderr)", "1", format(calibration), "", "",
         calibrated ? "1" : "0"});
  w.flush();
  io.out << (calibrated ? "PASS " : "FAIL ") << "error-bar calibration: spread/stderr = "
         << format(calibration) << '\n';
  write_manifest(config, "validate", {"validate.csv"});
  return ok ? kExitOk : kExitValidation;
}

}  // namespace qdkmc
