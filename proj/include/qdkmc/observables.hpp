#pragma once

// Measurable quantities built from a photon stream: decay histogram, per-class
// emission probability, HBT coincidences, and dark-run (blinking) statistics.

#include "qdkmc/kinetics.hpp"
#include "qdkmc/photon.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace qdkmc {

struct ObservableSettings {
  double period_t = 10.0;      // ns
  double decay_bin_ns = 0.05;  // decay histogram bin width
  double g2_bin_ns = 1.0;      // detector integration window
  double g2_max_lag_ns = 100.0;
  bool track_g2 = true;
  bool track_blink = true;

  void validate() const;
  std::size_t decay_bins() const;
  std::int64_t g2_lag_bins() const;

  friend bool operator==(const ObservableSettings&, const ObservableSettings&) = default;
};

using RunLengthHistogram = std::map<std::uint64_t, std::uint64_t>;

/// Histograms accumulated from one trajectory (or several, after merge()).
///
/// Decay, g2, and dark runs are taken over exciton (X) photons only. Dark-run
/// and coincidence histograms are kept closed at every cycle boundary: the
/// trailing run is counted at its current length. concat() re-joins runs and
/// coincidences that straddle two consecutive segments of one trajectory, so
/// segment-wise accumulation reproduces single-pass accumulation exactly.
class AccumulatorSet {
public:
  explicit AccumulatorSet(const ObservableSettings& settings = {});

  void on_photon(const PhotonRecord& p);
  void on_cycle_end(std::uint64_t cycle);

  /// Element-wise sum with an independent trajectory. The result can no
  /// longer be concatenated.
  void merge(const AccumulatorSet& other);

  /// Appends the segment that directly follows this one in the same trajectory.
  void concat(const AccumulatorSet& next);

  const ObservableSettings& settings() const noexcept { return settings_; }
  std::uint64_t n_cycles_seen() const noexcept { return n_cycles_; }
  const std::vector<std::uint64_t>& decay_hist() const noexcept { return decay_; }
  std::uint64_t class_count(ExcitonClass c) const noexcept
  {
    return classes_[static_cast<std::size_t>(c)];
  }
  const std::array<std::uint64_t, kExcitonClasses>& class_counts() const noexcept
  {
    return classes_;
  }
  const std::vector<std::uint64_t>& g2_hist() const noexcept { return g2_; }
  const RunLengthHistogram& blink_hist() const noexcept { return blink_; }
  std::uint64_t detector_count(Detector d) const noexcept
  {
    return detectors_[static_cast<std::size_t>(d)];
  }

  /// Equality of all accumulated counts (segment bookkeeping excluded).
  bool same_counts(const AccumulatorSet& other) const;

private:
  struct BinnedPhoton {
    std::int64_t bin;
    Detector detector;
  };

  std::int64_t time_bin(double t) const;
  void correlate(const BinnedPhoton& earlier, const BinnedPhoton& later);
  void bump_run(std::uint64_t from, std::uint64_t to);

  ObservableSettings settings_;
  std::int64_t lag_bins_;

  std::uint64_t n_cycles_ = 0;
  std::vector<std::uint64_t> decay_;
  std::array<std::uint64_t, kExcitonClasses> classes_{};
  std::array<std::uint64_t, 2> detectors_{};
  std::vector<std::uint64_t> g2_;
  RunLengthHistogram blink_;

  // Segment bookkeeping.
  bool segment_ = true;
  std::optional<std::uint64_t> first_cycle_;
  std::uint64_t end_cycle_ = 0;
  bool cycle_has_x_ = false;
  bool seen_x_ = false;
  std::uint64_t leading_run_ = 0;
  std::uint64_t trailing_run_ = 0;
  std::vector<BinnedPhoton> head_;
  std::deque<BinnedPhoton> window_;
};

/// Collects every photon; used for tests and diagnostics.
struct PhotonLog {
  std::vector<PhotonRecord> photons;
  std::uint64_t n_cycles = 0;

  void on_photon(const PhotonRecord& p) { photons.push_back(p); }
  void on_cycle_end(std::uint64_t) { ++n_cycles; }
};

struct DecayCurve {
  std::vector<double> t_ns;  // bin centres
  std::vector<std::uint64_t> counts;
  std::vector<double> normalized;
};

/// Counts per cycle per ns, further divided by p_in for above-band excitation.
DecayCurve decay_histogram(const AccumulatorSet& acc, std::optional<double> p_in);

double emission_probability(const AccumulatorSet& acc, ExcitonClass c);

enum class G2Normalization { Raw, Plateau };

struct G2Curve {
  std::vector<double> tau_ns;
  std::vector<double> raw;
  std::vector<double> normalized;
  double plateau = 0;
};

/// Coincidence histogram sum_t n_i(t) n_ii(t+tau). The plateau is the mean raw
/// level over max_lag/10 <= |tau| <= max_lag; `normalized` is NaN when it is 0.
G2Curve g2_correlate(const AccumulatorSet& acc, G2Normalization normalization);

/// Dark runs (maximal sets of consecutive cycles without a photon) in a record
/// of n_cycles cycles. `photon_cycles` must be sorted ascending.
RunLengthHistogram blink_runs(std::span<const std::uint64_t> photon_cycles,
                              std::uint64_t n_cycles);

}  // namespace qdkmc
