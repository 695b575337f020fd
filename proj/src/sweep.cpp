#include "qdkmc/sweep.hpp"

#include "qdkmc/csv.hpp"
#include "qdkmc/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qdkmc {

namespace {

std::string trim(std::string s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s)
{
  const std::string t = trim(s);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("axis: not a number: '" + t + "'");
  }
  if (used != t.size())
    throw std::invalid_argument("axis: not a number: '" + t + "'");
  return v;
}

}  // namespace

std::vector<double> logspace(double lo, double hi, std::size_t n)
{
  if (!(lo > 0) || !(hi > 0) || n == 0)
    throw std::invalid_argument("logspace: bounds must be > 0 and n >= 1");
  if (n == 1)
    return {lo};
  std::vector<double> v(n);
  const double a = std::log10(lo), b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

std::vector<double> parse_axis(const std::string& text)
{
  const std::string t = trim(text);
  if (t.rfind("log:", 0) == 0 || t.rfind("lin:", 0) == 0) {
    const auto parts = csv::split(t, ':');
    if (parts.size() != 4)
      throw std::invalid_argument("axis: expected kind:lo:hi:n, got '" + t + "'");
    const double lo = to_double(parts[1]);
    const double hi = to_double(parts[2]);
    const double nd = to_double(parts[3]);
    if (!(nd >= 1) || nd != std::floor(nd))
      throw std::invalid_argument("axis: point count must be a positive integer in '" + t + "'");
    const auto n = static_cast<std::size_t>(nd);
    if (parts[0] == "log")
      return logspace(lo, hi, n);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
  }
  std::vector<double> v;
  for (const auto& item : csv::split(t, ','))
    v.push_back(to_double(item));
  if (v.empty())
    throw std::invalid_argument("axis: empty");
  return v;
}

void GridSpec::validate() const
{
  RateParams{gamma_r, 0, 0, 1}.validate();
  if (n_levels < 1)
    throw std::invalid_argument("grid: n_levels must be >= 1");
  auto check = [](const std::vector<double>& axis, const char* name, bool strictly_positive) {
    if (axis.empty())
      throw std::invalid_argument(std::string("grid: axis ") + name + " is empty");
    for (double v : axis)
      if (!std::isfinite(v) || (strictly_positive ? !(v > 0) : !(v >= 0)))
        throw std::invalid_argument(std::string("grid: axis ") + name +
                                    (strictly_positive ? " needs values > 0" : " needs values >= 0"));
  };
  check(axes.gamma_nr, "gamma_nr", false);
  check(axes.gamma_sf, "gamma_sf", false);
  check(axes.purcell, "purcell", false);
  check(axes.period_t, "period_t", true);
  check(axes.p_in, "p_in", false);
  if (is_resonant(scheme) && axes.p_in.size() != 1)
    throw std::invalid_argument("grid: p_in axis must have one value for resonant excitation");
  if (cycles_per_point < 1)
    throw std::invalid_argument("grid: cycles_per_point must be >= 1");
}

std::size_t GridSpec::size() const
{
  return axes.gamma_nr.size() * axes.gamma_sf.size() * axes.purcell.size() *
         axes.period_t.size() * axes.p_in.size();
}

std::string GridSpec::to_json() const
{
  nlohmann::ordered_json j;
  j["gamma_r"] = gamma_r;
  j["n_levels"] = n_levels;
  j["scheme"] = scheme_name(scheme);
  if (const auto* r = std::get_if<Resonant>(&scheme))
    j["polarization"] = r->polarization == Polarization::UpDn ? "up_dn" : "dn_up";
  j["axes"]["gamma_nr"] = axes.gamma_nr;
  j["axes"]["gamma_sf"] = axes.gamma_sf;
  j["axes"]["purcell"] = axes.purcell;
  j["axes"]["period_t"] = axes.period_t;
  j["axes"]["p_in"] = axes.p_in;
  j["cycles_per_point"] = cycles_per_point;
  j["burn_in"] = burn_in;
  j["seed_base"] = seed_base;
  return j.dump(2);
}

double GridPoint::p_in() const
{
  if (const auto* nr = std::get_if<NonResonant>(&scheme))
    return nr->p_in;
  return 0.0;
}

GridPoint grid_point(const GridSpec& spec, std::size_t index)
{
  if (index >= spec.size())
    throw std::out_of_range("grid_point: index beyond grid");
  const auto& ax = spec.axes;
  std::size_t rest = index;
  const std::size_t i_pin = rest % ax.p_in.size();
  rest /= ax.p_in.size();
  const std::size_t i_t = rest % ax.period_t.size();
  rest /= ax.period_t.size();
  const std::size_t i_fp = rest % ax.purcell.size();
  rest /= ax.purcell.size();
  const std::size_t i_sf = rest % ax.gamma_sf.size();
  rest /= ax.gamma_sf.size();
  const std::size_t i_nr = rest;

  GridPoint p;
  p.index = index;
  p.params = RateParams{spec.gamma_r, ax.gamma_nr[i_nr], ax.gamma_sf[i_sf], ax.purcell[i_fp]};
  p.period_t = ax.period_t[i_t];
  p.scheme = spec.scheme;
  if (auto* nr = std::get_if<NonResonant>(&p.scheme))
    nr->p_in = ax.p_in[i_pin];
  p.seed = stream_seed(spec.seed_base, index);
  return p;
}

EmissionCounter::EmissionCounter(std::uint64_t first_cycle, std::uint64_t n_cycles)
    : first_(first_cycle), n_cycles_(n_cycles),
      batches_(n_cycles >= 2 * kBatches ? kBatches : 1),
      per_batch_(std::max<std::uint64_t>(1, n_cycles / batches_)), counts_(batches_)
{
}

std::size_t EmissionCounter::batch_of(std::uint64_t cycle) const noexcept
{
  const std::uint64_t b = (cycle - first_) / per_batch_;
  return static_cast<std::size_t>(std::min<std::uint64_t>(b, batches_ - 1));
}

std::uint64_t EmissionCounter::batch_size(std::size_t b) const noexcept
{
  return b + 1 < batches_ ? per_batch_ : n_cycles_ - per_batch_ * (batches_ - 1);
}

void EmissionCounter::on_photon(const PhotonRecord& p)
{
  ++counts_[batch_of(p.cycle_index)][static_cast<std::size_t>(p.exciton_class)];
}

double EmissionCounter::mean(ExcitonClass c) const
{
  if (n_cycles_ == 0)
    return 0.0;
  std::uint64_t total = 0;
  for (const auto& b : counts_)
    total += b[static_cast<std::size_t>(c)];
  return static_cast<double>(total) / static_cast<double>(n_cycles_);
}

double EmissionCounter::standard_error(ExcitonClass c) const
{
  if (n_cycles_ == 0)
    return 0.0;
  const auto k = static_cast<std::size_t>(c);
  if (batches_ < 2) {
    const double p = std::clamp(mean(c), 0.0, 1.0);
    return std::sqrt(p * (1 - p) / static_cast<double>(n_cycles_));
  }
  std::vector<double> rates(batches_);
  double avg = 0;
  for (std::size_t b = 0; b < batches_; ++b) {
    rates[b] = static_cast<double>(counts_[b][k]) / static_cast<double>(batch_size(b));
    avg += rates[b];
  }
  avg /= static_cast<double>(batches_);
  double ss = 0;
  for (double r : rates)
    ss += (r - avg) * (r - avg);
  const double nb = static_cast<double>(batches_);
  return std::sqrt(ss / (nb - 1) / nb);
}

PointResult simulate_point(const GridSpec& spec, std::size_t index)
{
  const GridPoint gp = grid_point(spec, index);
  PulseSchedule schedule{gp.period_t, spec.cycles_per_point, gp.scheme};
  Trajectory traj(gp.params, schedule, gp.seed, spec.n_levels);
  NullSink burn;
  traj.advance(spec.burn_in, burn);
  EmissionCounter counter(traj.cycle(), spec.cycles_per_point);
  traj.advance(spec.cycles_per_point, counter);

  PointResult r;
  r.point = gp;
  r.cycles = spec.cycles_per_point;
  for (auto c : kAllClasses) {
    r.p_out[static_cast<std::size_t>(c)] = counter.mean(c);
    r.stderr_[static_cast<std::size_t>(c)] = counter.standard_error(c);
  }
  return r;
}

std::vector<std::string> sweep_rows(const PointResult& r)
{
  std::vector<std::string> rows;
  const auto& p = r.point;
  const std::string prefix = csv::join({csv::format(p.params.gamma_nr),
                                        csv::format(p.params.gamma_sf),
                                        csv::format(p.params.purcell), csv::format(p.period_t),
                                        csv::format(p.p_in()), scheme_name(p.scheme)});
  for (auto c : kAllClasses) {
    rows.push_back(prefix + "," +
                   csv::join({std::string(to_string(c)), csv::format(r.p(c)), csv::format(r.se(c)),
                              csv::format(r.cycles), csv::format(p.seed)}));
  }
  return rows;
}

namespace {

std::filesystem::path manifest_path(const std::filesystem::path& log)
{
  return log.string() + ".manifest.json";
}

std::string manifest_text(const GridSpec& spec)
{
  nlohmann::ordered_json j;
  j["tool"] = "qdkmc sweep";
  j["version"] = kVersion;
  j["grid"] = nlohmann::ordered_json::parse(spec.to_json());
  return j.dump(2) + "\n";
}

std::string slurp(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

std::vector<PointResult> read_sweep_log(const std::filesystem::path& path, const GridSpec& spec)
{
  const std::string text = slurp(path);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string::npos)
      break;  // partial trailing line from an interrupted write
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  if (lines.empty() || lines.front() != kSweepHeader)
    throw std::runtime_error("sweep log " + path.string() + " has an unexpected header");

  std::vector<PointResult> out;
  const std::size_t groups = (lines.size() - 1) / kExcitonClasses;
  for (std::size_t g = 0; g < groups && g < spec.size(); ++g) {
    PointResult r;
    r.point = grid_point(spec, g);
    const auto expected = sweep_rows(r);
    for (std::size_t k = 0; k < kExcitonClasses; ++k) {
      const auto& line = lines[1 + g * kExcitonClasses + k];
      const auto fields = csv::split(line);
      const auto want = csv::split(expected[k]);
      if (fields.size() != want.size())
        throw std::runtime_error("sweep log: malformed row: " + line);
      for (std::size_t f : {0u, 1u, 2u, 3u, 4u, 5u, 6u, 10u})
        if (fields[f] != want[f])
          throw std::runtime_error("sweep log row does not belong to this grid: " + line);
      r.p_out[k] = csv::parse_double(fields[7]);
      r.stderr_[k] = csv::parse_double(fields[8]);
      r.cycles = csv::parse_u64(fields[9]);
    }
    if (r.cycles != spec.cycles_per_point)
      throw std::runtime_error("sweep log: cycle count differs from the grid");
    out.push_back(r);
  }
  return out;
}

SweepResult run_sweep(const GridSpec& spec, const SweepOptions& options)
{
  spec.validate();
  const std::size_t total = spec.size();
  SweepResult result;

  std::optional<csv::Writer> log;
  if (options.log_path) {
    const auto& path = *options.log_path;
    const auto mpath = manifest_path(path);
    const std::string manifest = manifest_text(spec);
    if (options.resume && std::filesystem::exists(path)) {
      if (std::filesystem::exists(mpath) && slurp(mpath) != manifest)
        throw std::runtime_error("sweep: manifest " + mpath.string() +
                                 " describes a different grid; refusing to resume");
      result.points = read_sweep_log(path, spec);
      // Rewrite so the log holds exactly the completed points.
      std::string text = std::string(kSweepHeader) + "\n";
      for (const auto& r : result.points)
        for (const auto& row : sweep_rows(r))
          text += row + "\n";
      write_text(path, text);
      log.emplace(path, csv::split(kSweepHeader), true);
    } else {
      log.emplace(path, csv::split(kSweepHeader));
    }
    write_text(mpath, manifest);
  }

  const std::size_t first = result.points.size();
  const std::size_t last =
      options.max_new_points ? std::min(total, first + *options.max_new_points) : total;
  if (first >= last)
    return result;

  std::vector<std::optional<PointResult>> slots(last - first);
  std::atomic<std::size_t> next{first};
  std::mutex mutex;
  std::condition_variable ready;
  std::exception_ptr failure;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= last)
        return;
      try {
        PointResult r = simulate_point(spec, i);
        std::lock_guard lock(mutex);
        slots[i - first] = std::move(r);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure)
          failure = std::current_exception();
        next.store(last);
      }
      ready.notify_all();
    }
  };

  const unsigned n_workers =
      static_cast<unsigned>(std::clamp<std::size_t>(options.workers, 1, last - first));
  std::vector<std::jthread> threads;
  threads.reserve(n_workers);
  for (unsigned w = 0; w < n_workers; ++w)
    threads.emplace_back(work);

  for (std::size_t i = first; i < last; ++i) {
    PointResult r;
    {
      std::unique_lock lock(mutex);
      ready.wait(lock, [&] { return slots[i - first].has_value() || failure; });
      if (!slots[i - first]) {
        lock.unlock();
        threads.clear();
        std::rethrow_exception(failure);
      }
      r = std::move(*slots[i - first]);
      slots[i - first].reset();
    }
    if (log) {
      for (const auto& row : sweep_rows(r))
        log->row(csv::split(row));
      log->flush();
    }
    result.points.push_back(std::move(r));
    if (options.progress)
      options.progress(result.points.size(), total);
  }
  return result;
}

std::vector<SaturationPoint> saturation_scan(const std::vector<double>& p_in_values,
                                             const RateParams& params, double period_t,
                                             std::uint64_t cycles, std::uint64_t seed,
                                             const SweepOptions& options, int n_levels)
{
  GridSpec spec;
  spec.gamma_r = params.gamma_r;
  spec.n_levels = n_levels;
  spec.axes.gamma_nr = {params.gamma_nr};
  spec.axes.gamma_sf = {params.gamma_sf};
  spec.axes.purcell = {params.purcell};
  spec.axes.period_t = {period_t};
  spec.axes.p_in = p_in_values;
  spec.scheme = NonResonant{};
  spec.cycles_per_point = cycles;
  spec.seed_base = seed;
  const auto res = run_sweep(spec, options);
  std::vector<SaturationPoint> out;
  for (const auto& r : res.points)
    out.push_back({r.point.p_in(), r.p(ExcitonClass::X), r.se(ExcitonClass::X),
                   r.p(ExcitonClass::XX), r.se(ExcitonClass::XX)});
  return out;
}

std::vector<Eigen::Index> RepetitionMap::ridge() const
{
  std::vector<Eigen::Index> rows;
  for (Eigen::Index c = 0; c < p_x.cols(); ++c) {
    Eigen::Index r = 0;
    p_x.col(c).maxCoeff(&r);
    rows.push_back(r);
  }
  return rows;
}

std::vector<Eigen::Index> RepetitionMap::diagonal() const
{
  std::vector<Eigen::Index> rows;
  for (double t : period_t) {
    Eigen::Index best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gamma_nr.size(); ++i) {
      const double d = std::abs(std::log(gamma_nr[i] * t));
      if (d < dist) {
        dist = d;
        best = static_cast<Eigen::Index>(i);
      }
    }
    rows.push_back(best);
  }
  return rows;
}

RepetitionMap repetition_scan(const std::vector<double>& period_values,
                              const std::vector<double>& gamma_nr_values,
                              const RateParams& params, const Scheme& scheme,
                              std::uint64_t cycles, std::uint64_t seed,
                              const SweepOptions& options, int n_levels)
{
  GridSpec spec;
  spec.gamma_r = params.gamma_r;
  spec.n_levels = n_levels;
  spec.axes.gamma_nr = gamma_nr_values;
  spec.axes.gamma_sf = {params.gamma_sf};
  spec.axes.purcell = {params.purcell};
  spec.axes.period_t = period_values;
  spec.scheme = scheme;
  spec.axes.p_in = {is_resonant(scheme) ? 0.0 : std::get<NonResonant>(scheme).p_in};
  spec.cycles_per_point = cycles;
  spec.seed_base = seed;
  const auto res = run_sweep(spec, options);

  RepetitionMap map;
  map.period_t = period_values;
  map.gamma_nr = gamma_nr_values;
  const auto n_nr = static_cast<Eigen::Index>(gamma_nr_values.size());
  const auto n_t = static_cast<Eigen::Index>(period_values.size());
  map.p_x.resize(n_nr, n_t);
  map.se_x.resize(n_nr, n_t);
  for (const auto& r : res.points) {
    const auto idx = static_cast<Eigen::Index>(r.point.index);
    map.p_x(idx / n_t, idx % n_t) = r.p(ExcitonClass::X);
    map.se_x(idx / n_t, idx % n_t) = r.se(ExcitonClass::X);
  }
  return map;
}

}  // namespace qdkmc
