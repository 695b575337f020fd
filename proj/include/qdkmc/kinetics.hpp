#pragma once

// Carrier kinetics of a single quantum dot: occupancy state, rate
// composition, and the exact stochastic step between pulses.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qdkmc {

/// Spin-resolved carrier column. Hole "up" is the double-arrow pseudospin.
enum class Column : std::uint8_t { ElectronUp = 0, ElectronDown = 1, HoleUp = 2, HoleDown = 3 };

inline constexpr std::array<Column, 4> kColumns{Column::ElectronUp, Column::ElectronDown,
                                                Column::HoleUp, Column::HoleDown};

constexpr Column opposite(Column c) noexcept
{
  switch (c) {
  case Column::ElectronUp: return Column::ElectronDown;
  case Column::ElectronDown: return Column::ElectronUp;
  case Column::HoleUp: return Column::HoleDown;
  case Column::HoleDown: return Column::HoleUp;
  }
  return c;
}

/// Occupancy counts of the four spin columns. Relaxation is instantaneous, so
/// occupied slots are always the lowest levels and the counts are the state.
class QDState {
public:
  QDState() = default;

  explicit QDState(int n_levels) : n_levels_(n_levels)
  {
    if (n_levels < 1 || n_levels > 255)
      throw std::invalid_argument("QDState: n_levels must be in [1, 255]");
  }

  QDState(int n_levels, int e_up, int e_dn, int h_up, int h_dn) : QDState(n_levels)
  {
    set(Column::ElectronUp, e_up);
    set(Column::ElectronDown, e_dn);
    set(Column::HoleUp, h_up);
    set(Column::HoleDown, h_dn);
  }

  int n_levels() const noexcept { return n_levels_; }
  int count(Column c) const noexcept { return counts_[static_cast<std::size_t>(c)]; }

  int n_e_up() const noexcept { return count(Column::ElectronUp); }
  int n_e_dn() const noexcept { return count(Column::ElectronDown); }
  int n_h_up() const noexcept { return count(Column::HoleUp); }
  int n_h_dn() const noexcept { return count(Column::HoleDown); }

  int electrons() const noexcept { return n_e_up() + n_e_dn(); }
  int holes() const noexcept { return n_h_up() + n_h_dn(); }

  bool empty() const noexcept { return electrons() == 0 && holes() == 0; }
  bool full(Column c) const noexcept { return count(c) >= n_levels_; }
  bool full() const noexcept
  {
    return full(Column::ElectronUp) && full(Column::ElectronDown) && full(Column::HoleUp) &&
           full(Column::HoleDown);
  }

  /// Number of spin-matched pairs (e-up with h-down, e-down with h-up).
  int bright_pairs() const noexcept
  {
    return std::min(n_e_up(), n_h_dn()) + std::min(n_e_dn(), n_h_up());
  }

  void set(Column c, int n)
  {
    if (n < 0 || n > n_levels_)
      throw std::out_of_range("QDState: count outside [0, n_levels]");
    counts_[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(n);
  }

  /// Adds one carrier; returns false (and leaves the state alone) when Pauli-blocked.
  bool add(Column c) noexcept
  {
    auto& n = counts_[static_cast<std::size_t>(c)];
    if (n >= n_levels_)
      return false;
    ++n;
    return true;
  }

  bool remove(Column c) noexcept
  {
    auto& n = counts_[static_cast<std::size_t>(c)];
    if (n == 0)
      return false;
    --n;
    return true;
  }

  /// Mixed-radix index in [0, (n_levels+1)^4).
  std::size_t index() const noexcept
  {
    const std::size_t base = static_cast<std::size_t>(n_levels_) + 1;
    std::size_t idx = 0;
    for (auto c : kColumns)
      idx = idx * base + static_cast<std::size_t>(count(c));
    return idx;
  }

  static QDState from_index(int n_levels, std::size_t idx)
  {
    QDState s(n_levels);
    const std::size_t base = static_cast<std::size_t>(n_levels) + 1;
    for (int k = 3; k >= 0; --k) {
      s.set(kColumns[static_cast<std::size_t>(k)], static_cast<int>(idx % base));
      idx /= base;
    }
    return s;
  }

  static std::size_t state_count(int n_levels) noexcept
  {
    const std::size_t base = static_cast<std::size_t>(n_levels) + 1;
    return base * base * base * base;
  }

  friend bool operator==(const QDState&, const QDState&) = default;

private:
  std::array<std::uint8_t, 4> counts_{};
  int n_levels_ = 2;
};

std::string to_string(const QDState& s);

/// Single-particle rates in ns^-1. The Purcell factor acts on the radiative
/// rate of the lone bright exciton only.
template <typename Scalar>
struct RateParamsT {
  Scalar gamma_r = Scalar(1);
  Scalar gamma_nr = Scalar(0.1);
  Scalar gamma_sf = Scalar(0.01);
  Scalar purcell = Scalar(1);

  void validate() const
  {
    using std::isfinite;
    if (!(gamma_r >= 0) || !(gamma_nr >= 0) || !(gamma_sf >= 0) || !(purcell >= 0) ||
        !isfinite(gamma_r) || !isfinite(gamma_nr) || !isfinite(gamma_sf) || !isfinite(purcell))
      throw std::invalid_argument("RateParams: rates and Purcell factor must be finite and >= 0");
  }

  Scalar exciton_nonradiative() const { return Scalar(2) * gamma_nr; }
  Scalar exciton_spin_flip() const { return Scalar(2) * gamma_sf; }

  /// Internal quantum efficiency with the bulk radiative rate.
  Scalar quantum_efficiency() const
  {
    const Scalar denom = gamma_r + exciton_nonradiative();
    return denom > 0 ? gamma_r / denom : Scalar(0);
  }

  /// Same, with the Purcell-enhanced exciton radiative rate.
  Scalar quantum_efficiency_purcell() const
  {
    const Scalar denom = purcell * gamma_r + exciton_nonradiative();
    return denom > 0 ? purcell * gamma_r / denom : Scalar(0);
  }
};

using RateParams = RateParamsT<double>;

/// Event channels, in RateVector component order.
enum class EventKind : std::uint8_t {
  RadiativeUpDn = 0,  // e-up + h-down
  RadiativeDnUp,      // e-down + h-up
  NonRadiativeEUp,
  NonRadiativeEDn,
  NonRadiativeHUp,
  NonRadiativeHDn,
  SpinFlipEUpToDn,
  SpinFlipEDnToUp,
  SpinFlipHUpToDn,
  SpinFlipHDnToUp,
};

inline constexpr int kEventKinds = 10;

constexpr bool is_radiative(EventKind k) noexcept
{
  return k == EventKind::RadiativeUpDn || k == EventKind::RadiativeDnUp;
}

std::string_view to_string(EventKind k) noexcept;

template <typename Scalar>
struct RateVectorT {
  using Components = Eigen::Matrix<Scalar, kEventKinds, 1>;
  Components values = Components::Zero();

  Scalar operator[](EventKind k) const { return values(static_cast<int>(k)); }
  Scalar& operator[](EventKind k) { return values(static_cast<int>(k)); }

  Scalar total() const { return values.sum(); }
  Scalar radiative() const { return values.template head<2>().sum(); }
  Scalar nonradiative() const { return values.template segment<4>(2).sum(); }
  Scalar spin_flip() const { return values.template tail<4>().sum(); }

  Scalar r_rad_up_dn() const { return (*this)[EventKind::RadiativeUpDn]; }
  Scalar r_rad_dn_up() const { return (*this)[EventKind::RadiativeDnUp]; }
};

using RateVector = RateVectorT<double>;

/// True when the dot holds exactly one electron and one hole of matching spin.
inline bool is_lone_bright_exciton(const QDState& s) noexcept
{
  return s.electrons() == 1 && s.holes() == 1 && s.bright_pairs() == 1;
}

template <typename Scalar>
RateVectorT<Scalar> total_rates(const QDState& s, const RateParamsT<Scalar>& p)
{
  RateVectorT<Scalar> r;
  const Scalar g_rad = is_lone_bright_exciton(s) ? p.gamma_r * p.purcell : p.gamma_r;
  r[EventKind::RadiativeUpDn] = Scalar(std::min(s.n_e_up(), s.n_h_dn())) * g_rad;
  r[EventKind::RadiativeDnUp] = Scalar(std::min(s.n_e_dn(), s.n_h_up())) * g_rad;

  r[EventKind::NonRadiativeEUp] = Scalar(s.n_e_up()) * p.gamma_nr;
  r[EventKind::NonRadiativeEDn] = Scalar(s.n_e_dn()) * p.gamma_nr;
  r[EventKind::NonRadiativeHUp] = Scalar(s.n_h_up()) * p.gamma_nr;
  r[EventKind::NonRadiativeHDn] = Scalar(s.n_h_dn()) * p.gamma_nr;

  auto flip = [&](Column from) {
    return s.full(opposite(from)) ? Scalar(0) : Scalar(s.count(from)) * p.gamma_sf;
  };
  r[EventKind::SpinFlipEUpToDn] = flip(Column::ElectronUp);
  r[EventKind::SpinFlipEDnToUp] = flip(Column::ElectronDown);
  r[EventKind::SpinFlipHUpToDn] = flip(Column::HoleUp);
  r[EventKind::SpinFlipHDnToUp] = flip(Column::HoleDown);
  return r;
}

/// Applies an event to the state. Throws if the event is not possible.
void apply_event(EventKind k, QDState& s);

/// Complex that emits, keyed on total electron/hole numbers just before emission.
enum class ExcitonClass : std::uint8_t { X = 0, XMinus, XPlus, XX, Higher };

inline constexpr int kExcitonClasses = 5;
inline constexpr std::array<ExcitonClass, kExcitonClasses> kAllClasses{
    ExcitonClass::X, ExcitonClass::XMinus, ExcitonClass::XPlus, ExcitonClass::XX,
    ExcitonClass::Higher};

std::string_view to_string(ExcitonClass c) noexcept;
std::optional<ExcitonClass> parse_exciton_class(std::string_view s) noexcept;

ExcitonClass classify_emission(const QDState& state_before);

inline ExcitonClass classify_counts(int electrons, int holes) noexcept
{
  if (electrons == 1 && holes == 1)
    return ExcitonClass::X;
  if (electrons == 2 && holes == 1)
    return ExcitonClass::XMinus;
  if (electrons == 1 && holes == 2)
    return ExcitonClass::XPlus;
  if (electrons == 2 && holes == 2)
    return ExcitonClass::XX;
  return ExcitonClass::Higher;
}

// ---------------------------------------------------------------------------
// Random streams

using Rng = std::mt19937_64;

/// 53-bit uniform in [0, 1).
inline double uniform01(Rng& rng) noexcept
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Exp(rate) variate, strictly positive; rate must be > 0.
inline double exponential(Rng& rng, double rate) noexcept
{
  const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  return -std::log(u) / rate;
}

inline std::uint64_t splitmix64(std::uint64_t x) noexcept
{
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of stream `index` under `base`; injective in index for a fixed base.
inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) noexcept
{
  return splitmix64(base + 0xD1B54A32D192ED03ull * (index + 1));
}

inline Rng make_rng(std::uint64_t seed)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

// ---------------------------------------------------------------------------
// Stochastic step

struct Event {
  EventKind kind;
  double time;  // ns
};

struct StepResult {
  std::optional<Event> event;
  QDState state;
  double time;
};

/// Picks the channel for a uniform draw in [0, total). Only channels with a
/// positive rate can be returned.
inline EventKind select_event(const RateVector& r, double target) noexcept
{
  int last_positive = 0;
  for (int k = 0; k < kEventKinds; ++k) {
    const double rk = r.values(k);
    if (rk <= 0)
      continue;
    last_positive = k;
    if (target < rk)
      return static_cast<EventKind>(k);
    target -= rk;
  }
  return static_cast<EventKind>(last_positive);
}

/// Draws the next event after t_now, or nothing if it would fall at or after
/// t_end. Does not modify the state.
inline std::optional<Event> draw_event(const QDState& state, const RateParams& params,
                                       double t_now, double t_end, Rng& rng)
{
  const RateVector r = total_rates(state, params);
  const double total = r.total();
  if (total <= 0)
    return std::nullopt;
  const double t = t_now + exponential(rng, total);
  if (!(t < t_end))
    return std::nullopt;
  return Event{select_event(r, uniform01(rng) * total), t};
}

/// One exact SSA step from t_now, truncated at t_end.
StepResult step_ssa(const QDState& state, const RateParams& params, double t_now, double t_end,
                    Rng& rng);

}  // namespace qdkmc
