#pragma once

#include "qdkmc/biexp.hpp"
#include "qdkmc/observables.hpp"

#include <span>
#include <stdexcept>

namespace qdkmc {

struct FitResult {
  int order = 1;
  /// For order 1 the single term is stored as the fast term and a_slow = 0.
  BiExponential curve;
  /// sum_i (y_i - f(x_i))^2 / max(y_i, 1)
  double residual = 0;
  int iterations = 0;
};

class FitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Single- or double-exponential least squares with Poisson weights 1/max(y,1).
/// Amplitudes and rates are kept positive; several starts are seeded from
/// log-slopes of the early and late parts of the curve and the best is kept.
FitResult fit_exponentials(std::span<const double> x, std::span<const double> y, int order);

/// 1 - residual(order 2) / residual(order 1).
double residual_improvement(const FitResult& single, const FitResult& dual);

struct FitPair {
  FitResult single;
  FitResult dual;
  double improvement = 0;
};

FitPair fit_both(std::span<const double> x, std::span<const double> y);

/// Fits the dark-run histogram as a function of run length in periods, over
/// every length from 1 to the longest run seen (absent lengths count as 0).
FitPair fit_blink(const RunLengthHistogram& hist);

}  // namespace qdkmc
