#include "qdkmc/fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace qdkmc {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Parameters are (log a_k, log gamma_k) for each term.
struct Problem {
  Eigen::Map<const Vec> x;
  Eigen::Map<const Vec> y;
  Vec inv_sigma;  // 1 / sqrt(max(y, 1))
  int order;

  Problem(std::span<const double> xs, std::span<const double> ys, int k)
      : x(xs.data(), static_cast<Eigen::Index>(xs.size())),
        y(ys.data(), static_cast<Eigen::Index>(ys.size())), order(k)
  {
    inv_sigma = y.array().max(1.0).rsqrt().matrix();
  }

  Vec model(const Vec& theta) const
  {
    Vec f = Vec::Zero(x.size());
    for (int k = 0; k < order; ++k)
      f.array() += std::exp(theta(2 * k)) * (-std::exp(theta(2 * k + 1)) * x.array()).exp();
    return f;
  }

  Vec residuals(const Vec& theta) const
  {
    return ((y - model(theta)).array() * inv_sigma.array()).matrix();
  }

  Mat jacobian(const Vec& theta) const
  {
    Mat j(x.size(), 2 * order);
    for (int k = 0; k < order; ++k) {
      const double a = std::exp(theta(2 * k));
      const double g = std::exp(theta(2 * k + 1));
      const Eigen::ArrayXd term = a * (-g * x.array()).exp();
      j.col(2 * k) = -(term * inv_sigma.array()).matrix();
      j.col(2 * k + 1) = (term * g * x.array() * inv_sigma.array()).matrix();
    }
    return j;
  }
};

struct Outcome {
  Vec theta;
  double cost = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

Outcome levenberg_marquardt(const Problem& prob, Vec theta)
{
  constexpr double kMinLog = -60.0;
  constexpr double kMaxLog = 60.0;
  auto clamp = [&](Vec t) { return Vec(t.array().max(kMinLog).min(kMaxLog)); };

  theta = clamp(theta);
  Outcome out;
  Vec r = prob.residuals(theta);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  int it = 0;
  for (; it < 5000; ++it) {
    const Mat j = prob.jacobian(theta);
    const Mat jtj = j.transpose() * j;
    const Vec jtr = j.transpose() * r;
    bool improved = false;
    while (lambda < 1e20) {
      Mat lhs = jtj;
      lhs.diagonal() += lambda * (jtj.diagonal().array() + 1e-12).matrix();
      const Vec step = lhs.ldlt().solve(-jtr);
      if (!step.allFinite()) {
        lambda *= 10;
        continue;
      }
      const Vec trial = clamp(theta + step);
      const Vec r_trial = prob.residuals(trial);
      const double c_trial = r_trial.squaredNorm();
      if (std::isfinite(c_trial) && c_trial < cost) {
        const double gain = cost - c_trial;
        const double step_size = step.cwiseAbs().maxCoeff();
        theta = trial;
        r = r_trial;
        cost = c_trial;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (gain <= 1e-15 * cost && step_size < 1e-10) {
          out = {theta, cost, it + 1};
          return out;
        }
        break;
      }
      lambda *= 5;
    }
    if (!improved)
      break;
  }
  out = {theta, cost, it};
  return out;
}

struct LogLine {
  double slope;  // d ln y / dx
  double intercept;
  bool ok;
};

LogLine log_line(const std::vector<double>& x, const std::vector<double>& y)
{
  if (x.size() < 2)
    return {0, 0, false};
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ly = std::log(y[i]);
    sx += x[i];
    sy += ly;
    sxx += x[i] * x[i];
    sxy += x[i] * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den <= 0)
    return {0, 0, false};
  const double slope = (n * sxy - sx * sy) / den;
  return {slope, (sy - slope * sx) / n, true};
}

// Amplitudes for fixed rates by weighted linear least squares, floored at a
// small positive fraction of the peak so they stay representable in log form.
Vec seed_theta(const Problem& prob, const std::vector<double>& rates)
{
  const int k = static_cast<int>(rates.size());
  Mat basis(prob.x.size(), k);
  for (int c = 0; c < k; ++c)
    basis.col(c) = ((-rates[static_cast<std::size_t>(c)] * prob.x.array()).exp() *
                    prob.inv_sigma.array())
                       .matrix();
  const Vec rhs = (prob.y.array() * prob.inv_sigma.array()).matrix();
  Vec amp = basis.colPivHouseholderQr().solve(rhs);
  const double peak = std::max(prob.y.maxCoeff(), 1e-300);
  Vec theta(2 * k);
  for (int c = 0; c < k; ++c) {
    const double a = std::isfinite(amp(c)) && amp(c) > 1e-6 * peak ? amp(c) : 1e-3 * peak;
    theta(2 * c) = std::log(a);
    theta(2 * c + 1) = std::log(rates[static_cast<std::size_t>(c)]);
  }
  return theta;
}

}  // namespace

FitResult fit_exponentials(std::span<const double> x, std::span<const double> y, int order)
{
  if (order != 1 && order != 2)
    throw std::invalid_argument("fit_exponentials: order must be 1 or 2");
  if (x.size() != y.size())
    throw std::invalid_argument("fit_exponentials: x and y differ in length");
  if (x.size() < 4)
    throw FitError("fit_exponentials: need at least 4 samples");
  std::vector<double> px, py;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] >= 0) || !std::isfinite(x[i]))
      throw std::invalid_argument("fit_exponentials: samples must be finite with y >= 0");
    if (y[i] > 0) {
      px.push_back(x[i]);
      py.push_back(y[i]);
    }
  }
  const bool tail_empty = std::all_of(y.begin() + 1, y.end(), [](double v) { return v == 0; });
  if (px.empty() || tail_empty || px.size() < 2)
    throw FitError("fit_exponentials: degenerate data (no counts beyond the first sample)");

  const Problem prob(x, y, order);

  const double span = std::max(px.back() - px.front(), 1e-12);
  auto rate_or = [&](const LogLine& l, double fallback) {
    return l.ok && -l.slope > 1e-9 / span ? -l.slope : fallback;
  };
  const std::size_t third = std::max<std::size_t>(2, px.size() / 3);
  const LogLine global = log_line(px, py);
  const LogLine early = log_line({px.begin(), px.begin() + static_cast<long>(third)},
                                 {py.begin(), py.begin() + static_cast<long>(third)});
  const LogLine late = log_line({px.end() - static_cast<long>(third), px.end()},
                                {py.end() - static_cast<long>(third), py.end()});
  const double g_all = rate_or(global, 1.0 / span);
  const double g_early = rate_or(early, g_all);
  const double g_late = rate_or(late, g_all);

  std::vector<std::vector<double>> starts;
  if (order == 1) {
    starts = {{g_all}, {g_early}, {g_late}};
  } else {
    starts = {{std::max(g_early, 1.5 * g_late), g_late},
              {3.0 * g_all, 0.3 * g_all},
              {10.0 * g_late, g_late}};
  }

  Outcome best;
  for (const auto& rates : starts) {
    const Outcome o = levenberg_marquardt(prob, seed_theta(prob, rates));
    if (o.theta.size() > 0 && std::isfinite(o.cost) && o.cost < best.cost)
      best = o;
  }
  if (!std::isfinite(best.cost))
    throw FitError("fit_exponentials: no start converged");

  FitResult out;
  out.order = order;
  out.residual = best.cost;
  out.iterations = best.iterations;
  out.curve.a_fast = std::exp(best.theta(0));
  out.curve.gamma_fast = std::exp(best.theta(1));
  if (order == 2) {
    out.curve.a_slow = std::exp(best.theta(2));
    out.curve.gamma_slow = std::exp(best.theta(3));
    out.curve.canonicalize();
  } else {
    out.curve.gamma_slow = out.curve.gamma_fast;
  }
  return out;
}

double residual_improvement(const FitResult& single, const FitResult& dual)
{
  if (!(single.residual > 0))
    return 0.0;
  return 1.0 - dual.residual / single.residual;
}

FitPair fit_both(std::span<const double> x, std::span<const double> y)
{
  FitPair out;
  out.single = fit_exponentials(x, y, 1);
  out.dual = fit_exponentials(x, y, 2);
  // A double exponential contains the single one; never report it as worse.
  if (out.dual.residual > out.single.residual) {
    out.dual = out.single;
    out.dual.order = 2;
    out.dual.curve.a_slow = 0;
  }
  out.improvement = residual_improvement(out.single, out.dual);
  return out;
}

FitPair fit_blink(const RunLengthHistogram& hist)
{
  if (hist.empty())
    throw FitError("fit_blink: no dark runs recorded");
  const std::uint64_t longest = hist.rbegin()->first;
  std::vector<double> x, y;
  for (std::uint64_t len = 1; len <= longest; ++len) {
    x.push_back(static_cast<double>(len));
    const auto it = hist.find(len);
    y.push_back(it == hist.end() ? 0.0 : static_cast<double>(it->second));
  }
  return fit_both(x, y);
}

}  // namespace qdkmc
