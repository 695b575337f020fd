#pragma once

// Parameter grids over (gamma_nr, gamma_sf, purcell, period, p_in), one
// independent trajectory per grid point, with an ordered append-only CSV log
// that can be resumed after interruption.

#include "qdkmc/excitation.hpp"
#include "qdkmc/kinetics.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qdkmc {

/// "log:lo:hi:n", "lin:lo:hi:n", or a comma-separated list.
std::vector<double> parse_axis(const std::string& text);
std::vector<double> logspace(double lo, double hi, std::size_t n);

struct GridAxes {
  std::vector<double> gamma_nr{0.1};
  std::vector<double> gamma_sf{0.01};
  std::vector<double> purcell{1.0};
  std::vector<double> period_t{10.0};
  std::vector<double> p_in{1.5};  // ignored (reported as 0) for resonant runs
};

struct GridSpec {
  double gamma_r = 1.0;
  int n_levels = 2;
  GridAxes axes;
  Scheme scheme = NonResonant{};
  std::uint64_t cycles_per_point = 1'000'000;
  std::uint64_t burn_in = 1000;
  std::uint64_t seed_base = 1;

  void validate() const;
  std::size_t size() const;
  std::string to_json() const;
};

struct GridPoint {
  std::size_t index = 0;
  RateParams params;
  double period_t = 10.0;
  Scheme scheme = NonResonant{};
  std::uint64_t seed = 0;

  double p_in() const;
};

/// Points are ordered with gamma_nr slowest and p_in fastest.
GridPoint grid_point(const GridSpec& spec, std::size_t index);

struct PointResult {
  GridPoint point;
  std::array<double, kExcitonClasses> p_out{};
  std::array<double, kExcitonClasses> stderr_{};
  std::uint64_t cycles = 0;

  double p(ExcitonClass c) const { return p_out[static_cast<std::size_t>(c)]; }
  double se(ExcitonClass c) const { return stderr_[static_cast<std::size_t>(c)]; }

  friend bool operator==(const PointResult& a, const PointResult& b)
  {
    return a.point.index == b.point.index && a.p_out == b.p_out && a.stderr_ == b.stderr_ &&
           a.cycles == b.cycles && a.point.seed == b.point.seed;
  }
};

struct SweepResult {
  std::vector<PointResult> points;
};

/// Photon counts per class in contiguous batches of cycles, for batch-means
/// standard errors that account for correlation between cycles.
class EmissionCounter {
public:
  static constexpr std::size_t kBatches = 50;

  EmissionCounter(std::uint64_t first_cycle, std::uint64_t n_cycles);

  void on_photon(const PhotonRecord& p);
  void on_cycle_end(std::uint64_t) noexcept {}

  double mean(ExcitonClass c) const;
  double standard_error(ExcitonClass c) const;
  std::uint64_t n_cycles() const noexcept { return n_cycles_; }

private:
  std::size_t batch_of(std::uint64_t cycle) const noexcept;
  std::uint64_t batch_size(std::size_t b) const noexcept;

  std::uint64_t first_;
  std::uint64_t n_cycles_;
  std::size_t batches_;
  std::uint64_t per_batch_;
  std::vector<std::array<std::uint64_t, kExcitonClasses>> counts_;
};

PointResult simulate_point(const GridSpec& spec, std::size_t index);

struct SweepOptions {
  unsigned workers = 1;
  std::optional<std::filesystem::path> log_path;
  bool resume = false;
  /// Stop after this many newly simulated points (for staged runs).
  std::optional<std::size_t> max_new_points;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Runs every grid point. Results (and log rows) come out in grid order and
/// are identical for any worker count.
SweepResult run_sweep(const GridSpec& spec, const SweepOptions& options = {});

inline constexpr const char* kSweepHeader =
    "gamma_nr,gamma_sf,purcell,period_t,p_in,scheme,class,p_out,stderr,cycles,seed";

std::vector<std::string> sweep_rows(const PointResult& r);

/// Reads completed points back from a sweep log.
std::vector<PointResult> read_sweep_log(const std::filesystem::path& path, const GridSpec& spec);

struct SaturationPoint {
  double p_in;
  double p_x, se_x;
  double p_xx, se_xx;
};

std::vector<SaturationPoint> saturation_scan(const std::vector<double>& p_in_values,
                                             const RateParams& params, double period_t,
                                             std::uint64_t cycles, std::uint64_t seed,
                                             const SweepOptions& options = {}, int n_levels = 2);

struct RepetitionMap {
  std::vector<double> period_t;
  std::vector<double> gamma_nr;
  Eigen::MatrixXd p_x;  // rows: gamma_nr, cols: period
  Eigen::MatrixXd se_x;

  /// Row of the largest P_out^X in each period column.
  std::vector<Eigen::Index> ridge() const;
  /// Row whose gamma_nr is closest (in log) to 1/T for each column.
  std::vector<Eigen::Index> diagonal() const;
};

RepetitionMap repetition_scan(const std::vector<double>& period_values,
                              const std::vector<double>& gamma_nr_values,
                              const RateParams& params, const Scheme& scheme,
                              std::uint64_t cycles, std::uint64_t seed,
                              const SweepOptions& options = {}, int n_levels = 2);

}  // namespace qdkmc
