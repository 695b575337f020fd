#include "qdkmc/analytic.hpp"
#include "qdkmc/ctmc.hpp"
#include "qdkmc/sweep.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <cmath>
#include <map>

using namespace qdkmc;

namespace {

const RateParams kPaper{1.0, 0.1, 0.01, 1.0};

// Independent RK4 integration of the bright/dark equations.
std::array<double, 2> rk4_bright_dark(const RateParams& p, double t_end, double b0, double d0)
{
  const double fr = p.purcell * p.gamma_r;
  const double nr = 2 * p.gamma_nr;
  const double sf = 2 * p.gamma_sf;
  auto f = [&](double b, double d) {
    return std::array<double, 2>{-(fr + nr) * b - sf * (b - d), -nr * d + sf * (b - d)};
  };
  double b = b0, d = d0;
  const int steps = 200000;
  const double h = t_end / steps;
  for (int i = 0; i < steps; ++i) {
    const auto k1 = f(b, d);
    const auto k2 = f(b + h / 2 * k1[0], d + h / 2 * k1[1]);
    const auto k3 = f(b + h / 2 * k2[0], d + h / 2 * k2[1]);
    const auto k4 = f(b + h * k3[0], d + h * k3[1]);
    b += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    d += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
  }
  return {b, d};
}

}  // namespace

TEST_CASE("analytic bright/dark solution matches an RK4 integration")
{
  const std::array<RateParams, 4> cases{kPaper, RateParams{1.0, 0.001, 0.01, 1.0},
                                        RateParams{1.0, 0.5, 0.3, 30.0},
                                        RateParams{2.0, 0.0, 0.0, 1.0}};
  for (const auto& p : cases) {
    for (double t : {0.5, 2.0, 10.0}) {
      for (auto [b0, d0] : {std::pair{1.0, 0.0}, std::pair{0.5, 0.5}}) {
        const auto exact = analytic_bright_dark(p, t, b0, d0);
        const auto ode = rk4_bright_dark(p, t, b0, d0);
        CHECK(std::abs(exact.bright - ode[0]) < 1e-9);
        CHECK(std::abs(exact.dark - ode[1]) < 1e-9);
        const auto modes = bright_population_modes(p, b0, d0);
        CHECK(std::abs(modes(t) - exact.bright) < 1e-12);
      }
    }
  }
  CHECK(analytic_bright_dark(kPaper, 0.0).bright == doctest::Approx(1.0));
  CHECK_THROWS(analytic_bright_dark(kPaper, -1.0));
}

TEST_CASE("baseline decay rates sit near r + 2 nr and 2 nr + 2 sf")
{
  const auto m = bright_population_modes(kPaper);
  CHECK(m.gamma_fast == doctest::Approx(1.2).epsilon(0.05));
  CHECK(m.gamma_slow == doctest::Approx(0.22).epsilon(0.10));
  CHECK(m.gamma_fast > m.gamma_slow);
}

TEST_CASE("bi-exponential helpers")
{
  const BiExponential f{2.0, 0.5, 1.3, 0.2};
  // bin average against a fine midpoint sum
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i)
    sum += f(0.5 + (i + 0.5) * 1.0 / n);
  CHECK(f.bin_average(0.5, 1.5) == doctest::Approx(sum / n).epsilon(1e-9));
  // periodic sum against an explicit truncated series
  const auto per = f.periodic(10.0);
  double series = 0;
  for (int k = 0; k < 400; ++k)
    series += f(3.0 + 10.0 * k);
  CHECK(per(3.0) == doctest::Approx(series).epsilon(1e-12));
  const BiExponential lone{1.0, 0.0, 1.0, 0.0};
  CHECK(std::isfinite(lone.periodic(10.0)(1.0)));
}

TEST_CASE("matrix exponential agrees with Eigen's MatrixFunctions")
{
  for (int levels : {1, 2}) {
    const CtmcModel m(kPaper, NonResonant{1.5}, levels);
    for (double t : {0.01, 1.0, 10.0, 1000.0}) {
      const Eigen::MatrixXd a = m.generator() * t;
      const Eigen::MatrixXd mine = matrix_exponential(a);
      const Eigen::MatrixXd ref = a.exp();
      CHECK((mine - ref).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
  Eigen::Matrix3d rot;
  rot << 0, -2, 0, 2, 0, 0, 0, 0, -1;
  CHECK((matrix_exponential(rot) - Eigen::Matrix3d(rot.exp())).norm() < 1e-13);
}

TEST_CASE("chain structure: generator rows sum to zero, maps are stochastic")
{
  for (int levels : {1, 2}) {
    for (const Scheme& s : {Scheme{Resonant{}}, Scheme{NonResonant{0.1}}, Scheme{NonResonant{3.0}}}) {
      const CtmcModel m(kPaper, s, levels);
      CHECK(m.generator().rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
      CHECK((m.pulse_map().rowwise().sum().array() - 1).abs().maxCoeff() < 1e-12);
      CHECK(m.pulse_map().minCoeff() >= 0);
      const Eigen::MatrixXd e = m.evolution(10.0);
      CHECK((e.rowwise().sum().array() - 1).abs().maxCoeff() < 1e-12);
    }
  }
  CHECK_THROWS(CtmcModel(kPaper, Resonant{}, 3));
}

TEST_CASE("pulse map matches sampled injections")
{
  Rng rng = make_rng(77);
  for (int levels : {1, 2}) {
    const CtmcModel m(kPaper, NonResonant{1.5}, levels);
    for (std::size_t from : {std::size_t{0}, QDState(levels, 1, 0, 0, 1).index(),
                             QDState(levels, 1, 0, 1, 0).index()}) {
      std::map<std::size_t, int> hits;
      const int n = 100000;
      for (int i = 0; i < n; ++i)
        ++hits[inject_nonresonant(QDState::from_index(levels, from), 1.5, rng).index()];
      for (Eigen::Index j = 0; j < m.size(); ++j) {
        const double p = m.pulse_map()(static_cast<Eigen::Index>(from), j);
        const double f = hits[static_cast<std::size_t>(j)] / double(n);
        CHECK(std::abs(f - p) <= 5 * std::sqrt(p * (1 - p) / n) + 1e-9);
      }
    }
  }
}

TEST_CASE("chain yields: closed forms")
{
  // Radiative decay only: one photon per pulse unless the exciton outlives T.
  const RateParams only_r{1.0, 0.0, 0.0, 1.0};
  const double x = ctmc_emission_probability(only_r, Resonant{}, 10.0, 2)[ExcitonClass::X];
  CHECK(x >= 0.99);
  CHECK(x <= 1.0);
  // every cycle starts with exactly one exciton, fresh or left over
  CHECK(x == doctest::Approx(1 - std::exp(-10.0)).epsilon(1e-9));

  const double zero = ctmc_emission_probability(only_r, NonResonant{0.0}, 10.0, 2)[ExcitonClass::X];
  CHECK(zero == doctest::Approx(0.0));

  // resonant yield can never exceed the Purcell quantum efficiency
  RateParams fp = kPaper;
  fp.purcell = 30;
  const double y = ctmc_emission_probability(fp, Resonant{}, 10.0, 2)[ExcitonClass::X];
  CHECK(y < fp.quantum_efficiency_purcell());
  CHECK(y > 0.95);
}

TEST_CASE("stochastic solver agrees with the exact chain (n_levels = 1)")
{
  GridSpec grid;
  grid.n_levels = 1;
  grid.cycles_per_point = 200000;
  grid.seed_base = 5;
  for (const Scheme& s : {Scheme{Resonant{}}, Scheme{NonResonant{0.5}}}) {
    grid.scheme = s;
    grid.axes.p_in = {is_resonant(s) ? 0.0 : 0.5};
    const PointResult r = run_sweep(grid).points.front();
    const auto exact = ctmc_emission_probability(kPaper, s, 10.0, 1);
    for (auto c : {ExcitonClass::X, ExcitonClass::XX}) {
      INFO(scheme_name(s) << " " << to_string(c));
      CHECK(std::abs(r.p(c) - exact[c]) <= 3 * r.se(c) + 1e-12);
    }
  }
}
