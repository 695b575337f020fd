#pragma once

// Exact continuous-time Markov chain for small dots. Used as an oracle for the
// stochastic solver: the cycle map is the pulse map followed by exp(Q T), and
// per-class photon yields come from the integrated radiative flux over one
// period.

#include "qdkmc/excitation.hpp"
#include "qdkmc/kinetics.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

namespace qdkmc {

/// exp(A) by scaling and squaring around a truncated Taylor series.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
matrix_exponential(const Eigen::MatrixBase<Derived>& a)
{
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using std::abs;
  using std::ceil;
  using std::log2;

  const Scalar norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > Scalar(0.5))
    squarings = static_cast<int>(ceil(log2(norm / Scalar(0.5))));
  const Matrix scaled = a / std::ldexp(Scalar(1), squarings);

  Matrix result = Matrix::Identity(a.rows(), a.cols());
  Matrix term = result;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (int k = 1; k < 64; ++k) {
    term = (term * scaled) / Scalar(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() <= eps * Scalar(1e-2))
      break;
  }
  for (int i = 0; i < squarings; ++i)
    result = (result * result).eval();
  return result;
}

/// Expected photons per excitation cycle, indexed by ExcitonClass.
template <typename Scalar>
struct ClassYield {
  std::array<Scalar, kExcitonClasses> per_cycle{};
  Scalar operator[](ExcitonClass c) const { return per_cycle[static_cast<std::size_t>(c)]; }
};

template <typename Scalar>
class CtmcModelT {
public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  static constexpr int kMaxLevels = 2;

  CtmcModelT(const RateParamsT<Scalar>& params, const Scheme& scheme, int n_levels)
      : params_(params), n_levels_(n_levels)
  {
    params.validate();
    if (n_levels < 1 || n_levels > kMaxLevels)
      throw std::invalid_argument("CtmcModel: n_levels must be 1 or 2");
    const auto n = static_cast<Eigen::Index>(QDState::state_count(n_levels));
    generator_ = Matrix::Zero(n, n);
    radiative_ = Matrix::Zero(n, kExcitonClasses);
    for (Eigen::Index i = 0; i < n; ++i) {
      const QDState s = QDState::from_index(n_levels, static_cast<std::size_t>(i));
      const auto r = total_rates(s, params);
      for (int k = 0; k < kEventKinds; ++k) {
        const Scalar rate = r.values(k);
        if (rate <= 0)
          continue;
        QDState next = s;
        apply_event(static_cast<EventKind>(k), next);
        const auto j = static_cast<Eigen::Index>(next.index());
        generator_(i, j) += rate;
        generator_(i, i) -= rate;
      }
      if (r.radiative() > 0)
        radiative_(i, static_cast<Eigen::Index>(classify_emission(s))) = r.radiative();
    }
    pulse_ = build_pulse_map(scheme);
  }

  int n_levels() const noexcept { return n_levels_; }
  Eigen::Index size() const noexcept { return generator_.rows(); }
  const Matrix& generator() const noexcept { return generator_; }
  const Matrix& pulse_map() const noexcept { return pulse_; }
  /// Radiative rate of each state, in the column of the class it emits.
  const Matrix& radiative_rates() const noexcept { return radiative_; }

  /// Row-stochastic exp(Q t).
  Matrix evolution(Scalar t) const { return matrix_exponential(generator_ * t); }

  /// Cycle-start (pre-pulse) distribution after many cycles from an empty dot.
  RowVector stationary_cycle_start(Scalar period) const
  {
    const Matrix cycle = pulse_ * evolution(period);
    return stationary(cycle);
  }

  ClassYield<Scalar> emission_per_cycle(Scalar period) const
  {
    if (!(period > 0))
      throw std::invalid_argument("CtmcModel: period must be > 0");
    const Eigen::Index n = size();
    // Van Loan block: exp([[Q T, R T], [0, 0]]) carries int_0^T exp(Q s) R ds
    // in its upper-right block.
    Matrix block = Matrix::Zero(n + kExcitonClasses, n + kExcitonClasses);
    block.topLeftCorner(n, n) = generator_ * period;
    block.topRightCorner(n, kExcitonClasses) = radiative_ * period;
    const Matrix e = matrix_exponential(block);
    const Matrix propagator = e.topLeftCorner(n, n);
    const Matrix flux = e.topRightCorner(n, kExcitonClasses);

    const RowVector start = stationary(pulse_ * propagator);
    const RowVector after_pulse = start * pulse_;
    const RowVector yield = after_pulse * flux;
    ClassYield<Scalar> out;
    for (int c = 0; c < kExcitonClasses; ++c)
      out.per_cycle[static_cast<std::size_t>(c)] = yield(c);
    return out;
  }

private:
  Matrix build_pulse_map(const Scheme& scheme) const
  {
    const Eigen::Index n = size();
    Matrix map = Matrix::Zero(n, n);
    if (const auto* res = std::get_if<Resonant>(&scheme)) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const QDState s = QDState::from_index(n_levels_, static_cast<std::size_t>(i));
        map(i, static_cast<Eigen::Index>(inject_resonant(s, res->polarization).index())) = 1;
      }
      return map;
    }

    const double p_in = std::get<NonResonant>(scheme).p_in;
    if (!(p_in >= 0))
      throw std::invalid_argument("CtmcModel: p_in must be >= 0");

    // One species (electrons or holes): state (up, down) in [0, L]^2. A single
    // capture picks a column at random and falls back to the other one.
    const int base = n_levels_ + 1;
    const int m = base * base;
    Matrix single = Matrix::Zero(m, m);
    for (int up = 0; up <= n_levels_; ++up) {
      for (int dn = 0; dn <= n_levels_; ++dn) {
        const int from = up * base + dn;
        auto land = [&](bool prefer_up) {
          const bool up_free = up < n_levels_;
          const bool dn_free = dn < n_levels_;
          if (prefer_up ? up_free : !dn_free && up_free)
            return (up + 1) * base + dn;
          if (dn_free)
            return up * base + dn + 1;
          return from;
        };
        single(from, land(true)) += Scalar(0.5);
        single(from, land(false)) += Scalar(0.5);
      }
    }

    // Every capture fills a slot while one is free, so 2L captures saturate.
    const int saturating = 2 * n_levels_;
    Matrix power = Matrix::Identity(m, m);
    Scalar weight = std::exp(Scalar(-p_in));
    Scalar cumulative = 0;
    for (int k = 0; k < saturating; ++k) {
      map_add_kron(map, power, weight);
      cumulative += weight;
      power = (power * single).eval();
      weight *= Scalar(p_in) / Scalar(k + 1);
    }
    map_add_kron(map, power, Scalar(1) - cumulative);
    return map;
  }

  static void map_add_kron(Matrix& map, const Matrix& species, Scalar weight)
  {
    const Eigen::Index m = species.rows();
    for (Eigen::Index ie = 0; ie < m; ++ie)
      for (Eigen::Index je = 0; je < m; ++je) {
        const Scalar e = species(ie, je);
        if (e == 0)
          continue;
        for (Eigen::Index ih = 0; ih < m; ++ih)
          for (Eigen::Index jh = 0; jh < m; ++jh)
            map(ie * m + ih, je * m + jh) += weight * e * species(ih, jh);
      }
  }

  RowVector stationary(const Matrix& cycle) const
  {
    const Eigen::Index n = size();
    RowVector pi = RowVector::Zero(n);
    pi(static_cast<Eigen::Index>(QDState(n_levels_).index())) = 1;

    // Power iteration accelerated by squaring: pi M^(2^k).
    Matrix m = cycle;
    const Scalar tol = Scalar(1e-13);
    for (int k = 0; k < 80; ++k) {
      const RowVector next = pi * m;
      const Scalar change = (next - pi).cwiseAbs().sum();
      pi = next;
      if (change < tol) {
        const Scalar residual = (pi * cycle - pi).cwiseAbs().sum();
        if (residual < Scalar(1e-12))
          return pi / pi.sum();
      }
      m = (m * m).eval();
      // squaring compounds rounding in the row sums; keep the map stochastic
      m.array().colwise() /= m.rowwise().sum().array();
    }
    throw std::runtime_error("CtmcModel: stationary distribution did not converge");
  }

  RateParamsT<Scalar> params_;
  int n_levels_;
  Matrix generator_;
  Matrix radiative_;
  Matrix pulse_;
};

using CtmcModel = CtmcModelT<double>;

/// Exact expected photons per cycle for each class, at stationarity.
template <typename Scalar>
ClassYield<Scalar> ctmc_emission_probability(const RateParamsT<Scalar>& params,
                                             const Scheme& scheme, Scalar period, int n_levels)
{
  return CtmcModelT<Scalar>(params, scheme, n_levels).emission_per_cycle(period);
}

}  // namespace qdkmc
