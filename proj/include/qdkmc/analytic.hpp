#pragma once

// Closed-form bright/dark exciton populations after a single excitation.
//
//   d/dt [b, d] = A [b, d],
//   A = [ -(F r + 2 nr + 2 sf)      2 sf        ]
//       [        2 sf          -(2 nr + 2 sf)   ]
//
// A is symmetric, so its 2x2 eigenproblem is solved directly.

#include "qdkmc/biexp.hpp"
#include "qdkmc/kinetics.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace qdkmc {

template <typename Scalar>
struct BrightDark {
  Scalar bright;
  Scalar dark;
};

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> bright_dark_generator(const RateParamsT<Scalar>& p)
{
  const Scalar coupling = p.exciton_spin_flip();
  const Scalar dark_loss = p.exciton_nonradiative() + coupling;
  Eigen::Matrix<Scalar, 2, 2> a;
  a << -(p.purcell * p.gamma_r + dark_loss), coupling, coupling, -dark_loss;
  return a;
}

/// Bright population as a sum of the two eigenmodes of the generator, for the
/// given initial populations.
template <typename Scalar>
BiExponentialT<Scalar> bright_population_modes(const RateParamsT<Scalar>& p,
                                               Scalar bright0 = Scalar(1),
                                               Scalar dark0 = Scalar(0))
{
  p.validate();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 2, 2>> eig;
  eig.computeDirect(bright_dark_generator(p));
  const auto& v = eig.eigenvectors();
  const Eigen::Matrix<Scalar, 2, 1> init(bright0, dark0);
  const Eigen::Matrix<Scalar, 2, 1> weights = v.transpose() * init;

  // Eigenvalues come out ascending: index 0 is the most negative (fast) mode.
  BiExponentialT<Scalar> modes;
  modes.gamma_fast = -eig.eigenvalues()(0);
  modes.gamma_slow = -eig.eigenvalues()(1);
  modes.a_fast = v(0, 0) * weights(0);
  modes.a_slow = v(0, 1) * weights(1);
  return modes;
}

template <typename Scalar>
BrightDark<Scalar> analytic_bright_dark(const RateParamsT<Scalar>& p, Scalar t,
                                        Scalar bright0 = Scalar(1), Scalar dark0 = Scalar(0))
{
  if (!(t >= 0))
    throw std::invalid_argument("analytic_bright_dark: t must be >= 0");
  p.validate();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 2, 2>> eig;
  eig.computeDirect(bright_dark_generator(p));
  const auto& v = eig.eigenvectors();
  const Eigen::Matrix<Scalar, 2, 1> init(bright0, dark0);
  const Eigen::Matrix<Scalar, 2, 1> decay = (eig.eigenvalues() * t).array().exp().matrix();
  const Eigen::Matrix<Scalar, 2, 1> rho =
      v * decay.asDiagonal() * (v.transpose() * init);
  return {rho(0), rho(1)};
}

/// Expected exciton photon rate per injected pair (ns^-1) under above-band
/// excitation: each pulse makes a bright or dark pair with equal odds, and
/// populations left over from earlier pulses add up.
template <typename Scalar>
BiExponentialT<Scalar> nonresonant_emission_density(const RateParamsT<Scalar>& p,
                                                    Scalar period)
{
  const auto modes = bright_population_modes(p, Scalar(0.5), Scalar(0.5));
  return modes.scaled(p.purcell * p.gamma_r).periodic(period);
}

/// Expected exciton photon rate after a pi-pulse into an empty dot (ns^-1).
template <typename Scalar>
BiExponentialT<Scalar> resonant_emission_density(const RateParamsT<Scalar>& p)
{
  return bright_population_modes(p).scaled(p.purcell * p.gamma_r);
}

}  // namespace qdkmc
