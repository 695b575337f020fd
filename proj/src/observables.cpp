#include "qdkmc/observables.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qdkmc {

void ObservableSettings::validate() const
{
  if (!(period_t > 0) || !std::isfinite(period_t))
    throw std::invalid_argument("observables: period_t must be > 0");
  if (!(decay_bin_ns > 0) || !std::isfinite(decay_bin_ns))
    throw std::invalid_argument("observables: decay bin width must be > 0");
  if (!(g2_bin_ns > 0) || !std::isfinite(g2_bin_ns))
    throw std::invalid_argument("observables: g2 bin width must be > 0");
  if (!(g2_max_lag_ns >= 0) || !std::isfinite(g2_max_lag_ns))
    throw std::invalid_argument("observables: g2 max lag must be >= 0");
}

std::size_t ObservableSettings::decay_bins() const
{
  const double ratio = period_t / decay_bin_ns;
  const double nearest = std::round(ratio);
  const double n = std::abs(ratio - nearest) < 1e-9 * ratio ? nearest : std::ceil(ratio);
  return static_cast<std::size_t>(std::max(1.0, n));
}

std::int64_t ObservableSettings::g2_lag_bins() const
{
  return static_cast<std::int64_t>(std::floor(g2_max_lag_ns / g2_bin_ns + 1e-9));
}

AccumulatorSet::AccumulatorSet(const ObservableSettings& settings)
    : settings_(settings), lag_bins_(0)
{
  settings_.validate();
  lag_bins_ = settings_.g2_lag_bins();
  decay_.assign(settings_.decay_bins(), 0);
  if (settings_.track_g2)
    g2_.assign(static_cast<std::size_t>(2 * lag_bins_ + 1), 0);
}

std::int64_t AccumulatorSet::time_bin(double t) const
{
  return static_cast<std::int64_t>(std::floor(t / settings_.g2_bin_ns));
}

void AccumulatorSet::correlate(const BinnedPhoton& earlier, const BinnedPhoton& later)
{
  const std::int64_t lag = later.bin - earlier.bin;
  if (earlier.detector == Detector::I && later.detector == Detector::II)
    ++g2_[static_cast<std::size_t>(lag_bins_ + lag)];
  else if (earlier.detector == Detector::II && later.detector == Detector::I)
    ++g2_[static_cast<std::size_t>(lag_bins_ - lag)];
}

void AccumulatorSet::bump_run(std::uint64_t from, std::uint64_t to)
{
  if (from > 0) {
    auto it = blink_.find(from);
    if (--it->second == 0)
      blink_.erase(it);
  }
  if (to > 0)
    ++blink_[to];
}

void AccumulatorSet::on_photon(const PhotonRecord& p)
{
  if (!first_cycle_) {
    first_cycle_ = p.cycle_index;
    end_cycle_ = p.cycle_index;
  }
  ++classes_[static_cast<std::size_t>(p.exciton_class)];
  ++detectors_[static_cast<std::size_t>(p.detector)];
  if (p.exciton_class != ExcitonClass::X)
    return;

  auto bin = static_cast<std::size_t>(p.t_in_period / settings_.decay_bin_ns);
  ++decay_[std::min(bin, decay_.size() - 1)];
  cycle_has_x_ = true;

  if (settings_.track_g2) {
    const BinnedPhoton bp{time_bin(p.t_abs), p.detector};
    while (!window_.empty() && bp.bin - window_.front().bin > lag_bins_)
      window_.pop_front();
    for (const auto& q : window_)
      correlate(q, bp);
    window_.push_back(bp);
    const double start = static_cast<double>(*first_cycle_) * settings_.period_t;
    if (bp.bin <= time_bin(start) + lag_bins_)
      head_.push_back(bp);
  }
}

void AccumulatorSet::on_cycle_end(std::uint64_t cycle)
{
  if (!first_cycle_) {
    first_cycle_ = cycle;
    end_cycle_ = cycle;
  }
  if (cycle != end_cycle_)
    throw std::logic_error("AccumulatorSet: cycles must be reported consecutively");
  if (settings_.track_blink) {
    if (cycle_has_x_) {
      seen_x_ = true;
      trailing_run_ = 0;
    } else {
      bump_run(trailing_run_, trailing_run_ + 1);
      ++trailing_run_;
      if (!seen_x_)
        leading_run_ = trailing_run_;
    }
  }
  cycle_has_x_ = false;
  ++n_cycles_;
  end_cycle_ = cycle + 1;
}

namespace {

void require_same(const ObservableSettings& a, const ObservableSettings& b)
{
  if (!(a == b))
    throw std::invalid_argument("AccumulatorSet: settings differ");
}

template <typename V>
void add_into(V& dst, const V& src)
{
  for (std::size_t i = 0; i < dst.size(); ++i)
    dst[i] += src[i];
}

}  // namespace

void AccumulatorSet::merge(const AccumulatorSet& other)
{
  require_same(settings_, other.settings_);
  n_cycles_ += other.n_cycles_;
  add_into(decay_, other.decay_);
  add_into(classes_, other.classes_);
  add_into(detectors_, other.detectors_);
  add_into(g2_, other.g2_);
  for (const auto& [len, n] : other.blink_)
    blink_[len] += n;
  segment_ = false;
  head_.clear();
  window_.clear();
}

void AccumulatorSet::concat(const AccumulatorSet& next)
{
  require_same(settings_, next.settings_);
  if (!segment_ || !next.segment_)
    throw std::logic_error("AccumulatorSet::concat: merged sets cannot be concatenated");
  if (!next.first_cycle_)
    return;
  if (!first_cycle_) {
    *this = next;
    return;
  }
  if (*next.first_cycle_ != end_cycle_)
    throw std::invalid_argument("AccumulatorSet::concat: segments are not consecutive");

  n_cycles_ += next.n_cycles_;
  add_into(decay_, next.decay_);
  add_into(classes_, next.classes_);
  add_into(detectors_, next.detectors_);

  if (settings_.track_g2) {
    add_into(g2_, next.g2_);
    const double seam = static_cast<double>(end_cycle_) * settings_.period_t;
    const std::int64_t seam_bin = time_bin(seam);
    for (const auto& a : window_) {
      if (a.bin < seam_bin - lag_bins_)
        continue;
      for (const auto& b : next.head_)
        if (b.bin - a.bin <= lag_bins_)
          correlate(a, b);
    }
    const std::int64_t start_bin =
        time_bin(static_cast<double>(*first_cycle_) * settings_.period_t);
    for (const auto& b : next.head_)
      if (b.bin <= start_bin + lag_bins_)
        head_.push_back(b);
    const std::int64_t end_bin =
        time_bin(static_cast<double>(next.end_cycle_) * settings_.period_t);
    while (!window_.empty() && window_.front().bin < end_bin - lag_bins_)
      window_.pop_front();
    window_.insert(window_.end(), next.window_.begin(), next.window_.end());
  }

  if (settings_.track_blink) {
    for (const auto& [len, n] : next.blink_)
      blink_[len] += n;
    if (trailing_run_ > 0 && next.leading_run_ > 0) {
      bump_run(trailing_run_, 0);
      bump_run(next.leading_run_, trailing_run_ + next.leading_run_);
    }
    if (!seen_x_)
      leading_run_ += next.leading_run_;
    trailing_run_ = next.seen_x_ ? next.trailing_run_ : trailing_run_ + next.trailing_run_;
    seen_x_ = seen_x_ || next.seen_x_;
  }

  end_cycle_ = next.end_cycle_;
  cycle_has_x_ = next.cycle_has_x_;
}

bool AccumulatorSet::same_counts(const AccumulatorSet& other) const
{
  return settings_ == other.settings_ && n_cycles_ == other.n_cycles_ &&
         decay_ == other.decay_ && classes_ == other.classes_ &&
         detectors_ == other.detectors_ && g2_ == other.g2_ && blink_ == other.blink_;
}

DecayCurve decay_histogram(const AccumulatorSet& acc, std::optional<double> p_in)
{
  if (acc.n_cycles_seen() == 0)
    throw std::invalid_argument("decay_histogram: accumulator is empty");
  if (p_in && !(*p_in > 0))
    throw std::invalid_argument("decay_histogram: p_in must be > 0 for normalization");
  const auto& s = acc.settings();
  const auto& hist = acc.decay_hist();
  DecayCurve out;
  out.t_ns.reserve(hist.size());
  out.counts = hist;
  out.normalized.reserve(hist.size());
  const double scale = static_cast<double>(acc.n_cycles_seen()) * p_in.value_or(1.0);
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double lo = static_cast<double>(i) * s.decay_bin_ns;
    const double hi = std::min(lo + s.decay_bin_ns, s.period_t);
    out.t_ns.push_back(0.5 * (lo + hi));
    out.normalized.push_back(static_cast<double>(hist[i]) / (scale * (hi - lo)));
  }
  return out;
}

double emission_probability(const AccumulatorSet& acc, ExcitonClass c)
{
  if (acc.n_cycles_seen() == 0)
    return 0.0;
  return static_cast<double>(acc.class_count(c)) / static_cast<double>(acc.n_cycles_seen());
}

G2Curve g2_correlate(const AccumulatorSet& acc, G2Normalization normalization)
{
  const auto& s = acc.settings();
  if (!s.track_g2)
    throw std::invalid_argument("g2_correlate: accumulator does not track coincidences");
  const double span = static_cast<double>(acc.n_cycles_seen()) * s.period_t;
  if (s.g2_max_lag_ns > span)
    throw std::invalid_argument("g2_correlate: max lag exceeds the trajectory span");

  const auto& hist = acc.g2_hist();
  const std::int64_t lag_bins = s.g2_lag_bins();
  G2Curve out;
  double sum = 0;
  std::size_t n = 0;
  for (std::int64_t k = -lag_bins; k <= lag_bins; ++k) {
    const double tau = static_cast<double>(k) * s.g2_bin_ns;
    const double raw = static_cast<double>(hist[static_cast<std::size_t>(k + lag_bins)]);
    out.tau_ns.push_back(tau);
    out.raw.push_back(raw);
    if (std::abs(tau) >= s.g2_max_lag_ns / 10.0 - 1e-12) {
      sum += raw;
      ++n;
    }
  }
  out.plateau = n > 0 ? sum / static_cast<double>(n) : 0.0;
  out.normalized.reserve(out.raw.size());
  for (double raw : out.raw) {
    if (normalization == G2Normalization::Raw)
      out.normalized.push_back(raw);
    else
      out.normalized.push_back(out.plateau > 0 ? raw / out.plateau
                                               : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

RunLengthHistogram blink_runs(std::span<const std::uint64_t> photon_cycles,
                              std::uint64_t n_cycles)
{
  RunLengthHistogram hist;
  std::uint64_t next_dark = 0;  // first cycle not yet known to be bright
  for (std::size_t i = 0; i < photon_cycles.size(); ++i) {
    const std::uint64_t c = photon_cycles[i];
    if (i > 0 && c < photon_cycles[i - 1])
      throw std::invalid_argument("blink_runs: cycle indices must be sorted");
    if (c >= n_cycles)
      throw std::invalid_argument("blink_runs: cycle index out of range");
    if (c > next_dark)
      ++hist[c - next_dark];
    next_dark = std::max(next_dark, c + 1);
  }
  if (n_cycles > next_dark)
    ++hist[n_cycles - next_dark];
  return hist;
}

}  // namespace qdkmc
