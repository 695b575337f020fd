#include "qdkmc/fit.hpp"
#include "qdkmc/kinetics.hpp"

#include <doctest.h>

#include <random>
#include <vector>

using namespace qdkmc;

namespace {

struct Samples {
  std::vector<double> x, y;
};

Samples synth(const BiExponential& f, double dx, int n, std::uint64_t noise_seed = 0)
{
  Samples s;
  Rng rng = make_rng(noise_seed);
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) * dx;
    s.x.push_back(x);
    if (noise_seed == 0) {
      s.y.push_back(f(x));
    } else {
      std::poisson_distribution<long> pois(f(x));
      s.y.push_back(static_cast<double>(pois(rng)));
    }
  }
  return s;
}

}  // namespace

TEST_CASE("noise-free single exponential")
{
  const auto s = synth({500.0, 0.0, 0.7, 0.0}, 0.1, 100);
  const auto r = fit_exponentials(s.x, s.y, 1);
  CHECK(r.curve.gamma_fast == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(r.curve.a_fast == doctest::Approx(500.0).epsilon(1e-6));
  CHECK(r.curve.a_slow == 0.0);
}

TEST_CASE("noise-free double exponential")
{
  const auto s = synth({2000.0, 60.0, 1.22, 0.22}, 0.05, 200);
  const auto r = fit_exponentials(s.x, s.y, 2);
  CHECK(r.curve.gamma_fast == doctest::Approx(1.22).epsilon(1e-4));
  CHECK(r.curve.gamma_slow == doctest::Approx(0.22).epsilon(1e-4));
  CHECK(r.curve.a_slow == doctest::Approx(60.0).epsilon(1e-4));
}

TEST_CASE("Poisson-noised double exponential with widely separated rates")
{
  const auto s = synth({5000.0, 80.0, 0.5, 0.01}, 1.0, 400, 17);
  const auto pair = fit_both(s.x, s.y);
  CHECK(pair.dual.curve.gamma_fast == doctest::Approx(0.5).epsilon(0.05));
  CHECK(pair.dual.curve.gamma_slow == doctest::Approx(0.01).epsilon(0.1));
  CHECK(pair.improvement > 0.5);
}

TEST_CASE("single-exponential data gains little from a second term")
{
  const auto s = synth({3000.0, 0.0, 0.3, 0.0}, 1.0, 60, 23);
  const auto pair = fit_both(s.x, s.y);
  CHECK(pair.single.curve.gamma_fast == doctest::Approx(0.3).epsilon(0.03));
  CHECK(pair.improvement >= 0.0);
  CHECK(pair.improvement < 0.1);
}

TEST_CASE("degenerate input is refused")
{
  const std::vector<double> x{0, 1, 2, 3, 4};
  const std::vector<double> zeros(5, 0.0);
  CHECK_THROWS_AS(fit_exponentials(x, zeros, 1), FitError);
  const std::vector<double> spike{7, 0, 0, 0, 0};
  CHECK_THROWS_AS(fit_exponentials(x, spike, 2), FitError);
  const std::vector<double> short_x{0, 1, 2}, short_y{3, 2, 1};
  CHECK_THROWS_AS(fit_exponentials(short_x, short_y, 1), FitError);
  const std::vector<double> neg{3, 2, -1, 1, 0};
  CHECK_THROWS_AS(fit_exponentials(x, neg, 1), std::invalid_argument);
  CHECK_THROWS_AS(fit_exponentials(x, spike, 3), std::invalid_argument);
  CHECK_THROWS_AS(fit_blink({}), FitError);
}

TEST_CASE("dark-run fit fills absent lengths with zeros")
{
  RunLengthHistogram h;
  for (std::uint64_t len = 1; len <= 40; ++len) {
    const auto n = static_cast<std::uint64_t>(std::llround(1000 * std::exp(-0.25 * len)));
    if (n > 0 && len != 25)
      h[len] = n;
  }
  const auto pair = fit_blink(h);
  CHECK(pair.single.curve.gamma_fast == doctest::Approx(0.25).epsilon(0.05));
}
