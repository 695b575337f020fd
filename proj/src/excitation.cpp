#include "qdkmc/excitation.hpp"

#include <cmath>
#include <stdexcept>

namespace qdkmc {

std::string scheme_name(const Scheme& s)
{
  return is_resonant(s) ? "resonant" : "nonresonant";
}

void PulseSchedule::validate() const
{
  if (!(period_t > 0) || !std::isfinite(period_t))
    throw std::invalid_argument("PulseSchedule: period_t must be > 0");
  if (n_cycles < 1)
    throw std::invalid_argument("PulseSchedule: n_cycles must be >= 1");
  if (const auto* nr = std::get_if<NonResonant>(&scheme))
    if (!(nr->p_in >= 0) || !std::isfinite(nr->p_in))
      throw std::invalid_argument("PulseSchedule: p_in must be >= 0");
}

namespace {

void add_one(QDState& state, Column up, Rng& rng)
{
  const Column c = (rng() >> 63) ? opposite(up) : up;
  if (!state.add(c))
    state.add(opposite(c));
}

}  // namespace

void add_pairs(QDState& state, int n, Rng& rng)
{
  for (int i = 0; i < n; ++i) {
    if (state.full(Column::ElectronUp) && state.full(Column::ElectronDown))
      break;
    add_one(state, Column::ElectronUp, rng);
  }
  for (int i = 0; i < n; ++i) {
    if (state.full(Column::HoleUp) && state.full(Column::HoleDown))
      break;
    add_one(state, Column::HoleUp, rng);
  }
}

QDState inject_nonresonant(QDState state, double p_in, Rng& rng)
{
  if (!(p_in >= 0))
    throw std::invalid_argument("inject_nonresonant: p_in must be >= 0");
  if (p_in == 0)
    return state;
  std::poisson_distribution<int> draw(p_in);
  add_pairs(state, draw(rng), rng);
  return state;
}

QDState inject_resonant(QDState state, Polarization polarization)
{
  if (!state.empty())
    return state;
  if (polarization == Polarization::UpDn) {
    state.add(Column::ElectronUp);
    state.add(Column::HoleDown);
  } else {
    state.add(Column::ElectronDown);
    state.add(Column::HoleUp);
  }
  return state;
}

Trajectory::Trajectory(const RateParams& params, const PulseSchedule& schedule,
                       std::uint64_t seed, int n_levels)
    : params_(params), period_(schedule.period_t), scheme_(schedule.scheme),
      state_(n_levels), rng_(make_rng(seed))
{
  params.validate();
  schedule.validate();
  if (const auto* nr = std::get_if<NonResonant>(&scheme_); nr && nr->p_in > 0)
    poisson_ = std::poisson_distribution<int>(nr->p_in);
}

void Trajectory::inject()
{
  if (const auto* res = std::get_if<Resonant>(&scheme_)) {
    state_ = inject_resonant(state_, res->polarization);
    return;
  }
  if (std::get<NonResonant>(scheme_).p_in > 0)
    add_pairs(state_, poisson_(rng_), rng_);
}

}  // namespace qdkmc
