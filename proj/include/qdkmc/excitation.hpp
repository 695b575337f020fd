#pragma once

#include "qdkmc/kinetics.hpp"
#include "qdkmc/photon.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <variant>

namespace qdkmc {

/// Above-band pulse: Poissonian number of electron-hole pairs with mean p_in.
struct NonResonant {
  double p_in = 1.5;
};

/// Which bright pair a polarized pi-pulse creates.
enum class Polarization : std::uint8_t { UpDn, DnUp };

/// Resonant pi-pulse; only excites an empty dot.
struct Resonant {
  Polarization polarization = Polarization::UpDn;
};

using Scheme = std::variant<NonResonant, Resonant>;

inline bool is_resonant(const Scheme& s) noexcept { return std::holds_alternative<Resonant>(s); }
std::string scheme_name(const Scheme& s);

struct PulseSchedule {
  double period_t = 10.0;  // ns
  std::uint64_t n_cycles = 1;
  Scheme scheme = NonResonant{};

  void validate() const;
};

/// Adds n electrons and n holes with uniform random spin. A carrier whose
/// column is full goes to the opposite column, or is dropped if both are full.
void add_pairs(QDState& state, int n, Rng& rng);

QDState inject_nonresonant(QDState state, double p_in, Rng& rng);
QDState inject_resonant(QDState state, Polarization polarization);

/// Sink concept used by Trajectory::advance.
template <typename S>
concept PhotonSink = requires(S& s, const PhotonRecord& p, std::uint64_t c) {
  s.on_photon(p);
  s.on_cycle_end(c);
};

struct NullSink {
  void on_photon(const PhotonRecord&) noexcept {}
  void on_cycle_end(std::uint64_t) noexcept {}
};

/// One dot driven by a pulse train. The state and the random stream carry
/// over between calls to advance(), so a long run may be split into segments.
class Trajectory {
public:
  Trajectory(const RateParams& params, const PulseSchedule& schedule, std::uint64_t seed,
             int n_levels = 2);

  template <PhotonSink Sink>
  void advance(std::uint64_t n_cycles, Sink& sink);

  const QDState& state() const noexcept { return state_; }
  std::uint64_t cycle() const noexcept { return cycle_; }
  double period() const noexcept { return period_; }

private:
  void inject();

  RateParams params_;
  double period_;
  Scheme scheme_;
  QDState state_;
  Rng rng_;
  std::poisson_distribution<int> poisson_;
  std::uint64_t cycle_ = 0;
};

template <PhotonSink Sink>
void Trajectory::advance(std::uint64_t n_cycles, Sink& sink)
{
  const std::uint64_t last = cycle_ + n_cycles;
  for (; cycle_ < last; ++cycle_) {
    inject();
    double t = 0.0;
    while (!state_.empty()) {
      const auto ev = draw_event(state_, params_, t, period_, rng_);
      if (!ev)
        break;
      t = ev->time;
      if (is_radiative(ev->kind)) {
        PhotonRecord rec;
        rec.t_in_period = t;
        rec.t_abs = static_cast<double>(cycle_) * period_ + t;
        rec.cycle_index = cycle_;
        rec.exciton_class = classify_counts(state_.electrons(), state_.holes());
        rec.detector = (rng_() >> 63) ? Detector::II : Detector::I;
        sink.on_photon(rec);
      }
      apply_event(ev->kind, state_);
    }
    sink.on_cycle_end(cycle_);
  }
}

/// Runs schedule.n_cycles cycles from an empty dot into `sink` and returns it.
template <PhotonSink Sink>
Sink run_trajectory(const RateParams& params, const PulseSchedule& schedule, std::uint64_t seed,
                    Sink sink, int n_levels = 2)
{
  Trajectory traj(params, schedule, seed, n_levels);
  traj.advance(schedule.n_cycles, sink);
  return sink;
}

}  // namespace qdkmc
