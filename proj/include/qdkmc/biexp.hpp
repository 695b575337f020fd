#pragma once

#include <cmath>
#include <utility>

namespace qdkmc {

/// a_fast exp(-gamma_fast t) + a_slow exp(-gamma_slow t), rates in ns^-1 (or
/// per period, for run-length histograms).
template <typename Scalar>
struct BiExponentialT {
  Scalar a_fast = 0;
  Scalar a_slow = 0;
  Scalar gamma_fast = 0;
  Scalar gamma_slow = 0;

  Scalar operator()(Scalar t) const
  {
    using std::exp;
    return a_fast * exp(-gamma_fast * t) + a_slow * exp(-gamma_slow * t);
  }

  /// Mean value over [lo, hi].
  Scalar bin_average(Scalar lo, Scalar hi) const
  {
    return term_average(a_fast, gamma_fast, lo, hi) + term_average(a_slow, gamma_slow, lo, hi);
  }

  /// Sum over k >= 0 of f(t + k*period). Terms with nonzero amplitude need a
  /// positive rate.
  BiExponentialT periodic(Scalar period) const
  {
    using std::expm1;
    BiExponentialT out = *this;
    if (a_fast != Scalar(0))
      out.a_fast = a_fast / -expm1(-gamma_fast * period);
    if (a_slow != Scalar(0))
      out.a_slow = a_slow / -expm1(-gamma_slow * period);
    return out;
  }

  BiExponentialT scaled(Scalar factor) const
  {
    BiExponentialT out = *this;
    out.a_fast *= factor;
    out.a_slow *= factor;
    return out;
  }

  /// Swaps terms so that gamma_fast >= gamma_slow.
  void canonicalize()
  {
    if (gamma_fast < gamma_slow) {
      std::swap(gamma_fast, gamma_slow);
      std::swap(a_fast, a_slow);
    }
  }

private:
  static Scalar term_average(Scalar a, Scalar g, Scalar lo, Scalar hi)
  {
    using std::exp;
    using std::expm1;
    const Scalar w = hi - lo;
    if (g * w == Scalar(0))
      return a * exp(-g * lo);
    return a * exp(-g * lo) * (-expm1(-g * w)) / (g * w);
  }
};

using BiExponential = BiExponentialT<double>;

}  // namespace qdkmc
