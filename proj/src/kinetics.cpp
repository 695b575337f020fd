#include "qdkmc/kinetics.hpp"

#include <sstream>

namespace qdkmc {

std::string to_string(const QDState& s)
{
  std::ostringstream os;
  os << "{e_up=" << s.n_e_up() << ", e_dn=" << s.n_e_dn() << ", h_up=" << s.n_h_up()
     << ", h_dn=" << s.n_h_dn() << ", levels=" << s.n_levels() << "}";
  return os.str();
}

std::string_view to_string(EventKind k) noexcept
{
  switch (k) {
  case EventKind::RadiativeUpDn: return "radiative_up_dn";
  case EventKind::RadiativeDnUp: return "radiative_dn_up";
  case EventKind::NonRadiativeEUp: return "nonradiative_e_up";
  case EventKind::NonRadiativeEDn: return "nonradiative_e_dn";
  case EventKind::NonRadiativeHUp: return "nonradiative_h_up";
  case EventKind::NonRadiativeHDn: return "nonradiative_h_dn";
  case EventKind::SpinFlipEUpToDn: return "spin_flip_e_up_to_dn";
  case EventKind::SpinFlipEDnToUp: return "spin_flip_e_dn_to_up";
  case EventKind::SpinFlipHUpToDn: return "spin_flip_h_up_to_dn";
  case EventKind::SpinFlipHDnToUp: return "spin_flip_h_dn_to_up";
  }
  return "unknown";
}

std::string_view to_string(ExcitonClass c) noexcept
{
  switch (c) {
  case ExcitonClass::X: return "X";
  case ExcitonClass::XMinus: return "X-";
  case ExcitonClass::XPlus: return "X+";
  case ExcitonClass::XX: return "XX";
  case ExcitonClass::Higher: return "higher";
  }
  return "unknown";
}

std::optional<ExcitonClass> parse_exciton_class(std::string_view s) noexcept
{
  for (auto c : kAllClasses)
    if (to_string(c) == s)
      return c;
  return std::nullopt;
}

ExcitonClass classify_emission(const QDState& state_before)
{
  if (state_before.bright_pairs() == 0)
    throw std::invalid_argument("classify_emission: state has no spin-matched pair: " +
                                to_string(state_before));
  return classify_counts(state_before.electrons(), state_before.holes());
}

namespace {

void require(bool ok, EventKind k, const QDState& s)
{
  if (!ok)
    throw std::logic_error("apply_event: " + std::string(to_string(k)) +
                           " impossible in state " + to_string(s));
}

void move_carrier(QDState& s, Column from, EventKind k)
{
  require(s.count(from) > 0 && !s.full(opposite(from)), k, s);
  s.remove(from);
  s.add(opposite(from));
}

}  // namespace

void apply_event(EventKind k, QDState& s)
{
  switch (k) {
  case EventKind::RadiativeUpDn:
    require(s.n_e_up() > 0 && s.n_h_dn() > 0, k, s);
    s.remove(Column::ElectronUp);
    s.remove(Column::HoleDown);
    return;
  case EventKind::RadiativeDnUp:
    require(s.n_e_dn() > 0 && s.n_h_up() > 0, k, s);
    s.remove(Column::ElectronDown);
    s.remove(Column::HoleUp);
    return;
  case EventKind::NonRadiativeEUp: require(s.remove(Column::ElectronUp), k, s); return;
  case EventKind::NonRadiativeEDn: require(s.remove(Column::ElectronDown), k, s); return;
  case EventKind::NonRadiativeHUp: require(s.remove(Column::HoleUp), k, s); return;
  case EventKind::NonRadiativeHDn: require(s.remove(Column::HoleDown), k, s); return;
  case EventKind::SpinFlipEUpToDn: move_carrier(s, Column::ElectronUp, k); return;
  case EventKind::SpinFlipEDnToUp: move_carrier(s, Column::ElectronDown, k); return;
  case EventKind::SpinFlipHUpToDn: move_carrier(s, Column::HoleUp, k); return;
  case EventKind::SpinFlipHDnToUp: move_carrier(s, Column::HoleDown, k); return;
  }
}

StepResult step_ssa(const QDState& state, const RateParams& params, double t_now, double t_end,
                    Rng& rng)
{
  if (!(t_now < t_end))
    throw std::invalid_argument("step_ssa: t_now must be < t_end");
  const auto ev = draw_event(state, params, t_now, t_end, rng);
  if (!ev)
    return {std::nullopt, state, t_end};
  QDState next = state;
  apply_event(ev->kind, next);
  return {ev, next, ev->time};
}

}  // namespace qdkmc
