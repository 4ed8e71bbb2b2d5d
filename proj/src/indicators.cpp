#include "trendlab/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trendlab/error.hpp"
#include "trendlab/numeric.hpp"

namespace trendlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

EmaState::EmaState(double tau_bars, double value)
    : tau_(tau_bars), decay_(std::exp(-1.0 / tau_bars)), value_(value) {
  if (!(tau_bars > 0.0) || !std::isfinite(tau_bars)) {
    throw InvalidArgument("EMA memory must be positive and finite");
  }
  if (!std::isfinite(value)) throw InvalidArgument("EMA value must be finite");
}

EmaState ema_step(const EmaState& state, double ret) {
  EmaState next = state;
  next.value_ = state.decay_ * state.value_ + ret;
  return next;
}

std::vector<double> ema_trajectory(std::span<const double> returns, double tau_bars) {
  EmaState state(tau_bars);
  std::vector<double> out;
  out.reserve(returns.size());
  for (double r : returns) {
    state = ema_step(state, r);
    out.push_back(state.value());
  }
  return out;
}

std::vector<double> rolling_stddev(std::span<const double> values, std::size_t window) {
  if (window < 2) throw InvalidArgument("rolling window must be >= 2");
  std::vector<double> out(values.size(), kNaN);
  if (values.size() < window) return out;

  // Fixed-size Welford update: replace the oldest value by the newest.
  const double n = static_cast<double>(window);
  double m = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    const double delta = values[i] - m;
    m += delta / static_cast<double>(i + 1);
    m2 += delta * (values[i] - m);
  }
  out[window - 1] = std::sqrt(std::max(m2, 0.0) / (n - 1.0));
  for (std::size_t i = window; i < values.size(); ++i) {
    const double x_new = values[i];
    const double x_old = values[i - window];
    const double old_mean = m;
    m += (x_new - x_old) / n;
    m2 += (x_new - x_old) * (x_new - m + x_old - old_mean);
    out[i] = std::sqrt(std::max(m2, 0.0) / (n - 1.0));
  }
  return out;
}

RollingVolatility rolling_volatility(const Series& s, std::size_t window_bars) {
  if (window_bars < 2) throw InvalidArgument("volatility window must be >= 2");
  if (s.size() < window_bars + 1) {
    throw InvalidArgument("series shorter than volatility window + 1");
  }
  const auto rets = log_returns(s, 1);  // rets[k-1] ends at bar k
  const auto sd = rolling_stddev(rets, window_bars);
  RollingVolatility vol;
  vol.warmup = window_bars;
  vol.values.assign(s.size(), kNaN);
  for (std::size_t k = window_bars; k < s.size(); ++k) {
    vol.values[k] = sd[k - 1] * static_cast<double>(s[k].close);
  }
  return vol;
}

std::vector<Crossing> detect_crossings(std::span<const double> fast, std::span<const double> slow) {
  if (fast.size() != slow.size()) throw InvalidArgument("detect_crossings: length mismatch");
  std::vector<Crossing> out;
  int last = 0;
  for (std::size_t k = 0; k < fast.size(); ++k) {
    const int s = sign_of(fast[k] - slow[k]);
    if (s == 0) continue;
    if (last != 0 && s != last) {
      out.push_back({k, s > 0 ? CrossDirection::up : CrossDirection::down});
    }
    last = s;
  }
  return out;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  if (window < 1) throw InvalidArgument("moving average window must be >= 1");
  std::vector<double> out(values.size(), kNaN);
  if (values.size() < window) return out;
  constexpr std::size_t kResum = 4096;
  double sum = 0.0;
  for (std::size_t i = 0; i < window; ++i) sum += values[i];
  out[window - 1] = sum / static_cast<double>(window);
  for (std::size_t i = window; i < values.size(); ++i) {
    if ((i - window) % kResum == kResum - 1) {
      sum = 0.0;
      for (std::size_t j = i + 1 - window; j <= i; ++j) sum += values[j];
    } else {
      sum += values[i] - values[i - window];
    }
    out[i] = sum / static_cast<double>(window);
  }
  return out;
}

namespace {

struct CrossCount {
  std::size_t crossings;
  std::size_t usable;
};

CrossCount count_ma_crossings(std::span<const double> path, std::size_t t1, std::size_t t2) {
  const auto fast = moving_average(path, t1);
  const auto slow = moving_average(path, t2);
  const std::size_t first = t2 - 1;
  const std::span<const double> f(fast.data() + first, fast.size() - first);
  const std::span<const double> s(slow.data() + first, slow.size() - first);
  return {detect_crossings(f, s).size(), f.size()};
}

void check_crossing_args(std::size_t len, std::size_t t1, std::size_t t2) {
  if (t1 < 1 || t1 >= t2) throw InvalidArgument("crossing density needs 1 <= t1 < t2");
  if (t2 > len / 10) throw InvalidArgument("crossing density needs t2 <= len / 10");
}

}  // namespace

std::vector<std::size_t> default_t1_family(std::size_t t2_bars) {
  std::vector<std::size_t> out;
  for (int i = 1; i <= 9; ++i) {
    const auto t1 = static_cast<std::size_t>(
        std::lround(static_cast<double>(t2_bars) * (0.5 + 0.05 * i)));
    if (2 * t1 > t2_bars && t1 < t2_bars && (out.empty() || out.back() != t1)) out.push_back(t1);
  }
  return out;
}

CrossingScan crossing_density_scan(std::span<const double> path, std::size_t t2_bars,
                                   std::span<const std::size_t> t1_values) {
  CrossingScan scan;
  scan.t2_bars = t2_bars;
  scan.low_confidence = path.size() < 100 * t2_bars;
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t t1 : t1_values) {
    check_crossing_args(path.size(), t1, t2_bars);
    const double dt = static_cast<double>(t2_bars - t1) / static_cast<double>(t1);
    if (!(dt < 1.0)) throw InvalidArgument("crossing scan needs t1 > t2 / 2");
    const auto count = count_ma_crossings(path, t1, t2_bars);
    const double density = static_cast<double>(count.crossings) / static_cast<double>(count.usable);
    scan.points.push_back({t1, dt, density});
    if (count.crossings == 0) {
      scan.low_confidence = true;
      continue;
    }
    x.push_back(std::log(dt * (1.0 - dt)));
    y.push_back(std::log(density));
  }
  if (x.size() < 2) throw InvalidArgument("crossing scan needs at least 2 usable t1 values");
  const auto fit = fit_line(x, y);
  scan.slope = fit.slope;
  scan.intercept = fit.intercept;
  scan.slope_stderr = fit.slope_stderr;
  scan.hurst = fit.slope + 1.0;
  return scan;
}

CrossingDensityEstimate crossing_density(std::span<const double> path, std::size_t t1_bars,
                                         std::size_t t2_bars) {
  check_crossing_args(path.size(), t1_bars, t2_bars);
  CrossingDensityEstimate est;
  est.t1_bars = t1_bars;
  est.t2_bars = t2_bars;
  est.delta_t = static_cast<double>(t2_bars - t1_bars) / static_cast<double>(t1_bars);
  const auto count = count_ma_crossings(path, t1_bars, t2_bars);
  est.crossings = count.crossings;
  est.usable_bars = count.usable;
  est.density = static_cast<double>(count.crossings) / static_cast<double>(count.usable);
  est.low_confidence = path.size() < 100 * t2_bars;

  const auto family = default_t1_family(t2_bars);
  try {
    const auto scan = crossing_density_scan(path, t2_bars, family);
    est.hurst_implied = scan.hurst;
    est.slope_stderr = scan.slope_stderr;
    est.low_confidence = est.low_confidence || scan.low_confidence;
  } catch (const InvalidArgument&) {
    est.hurst_implied = kNaN;
    est.low_confidence = true;
  }
  return est;
}

CrossingDensityEstimate crossing_density(const Series& s, std::size_t t1_bars,
                                         std::size_t t2_bars) {
  const auto path = s.closes();
  return crossing_density(std::span<const double>(path), t1_bars, t2_bars);
}

HurstEstimate hurst_rescaled_range(std::span<const double> returns) {
  if (returns.size() < 512) throw InvalidArgument("R/S analysis needs at least 512 returns");
  std::vector<double> log_n;
  std::vector<double> log_rs;
  std::vector<double> cum;
  for (std::size_t n = 16; n <= returns.size() / 4; n *= 2) {
    const std::size_t blocks = returns.size() / n;
    double rs_sum = 0.0;
    std::size_t rs_count = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
      const auto block = returns.subspan(b * n, n);
      const double m = mean(block);
      double y = 0.0;
      double lo = 0.0;
      double hi = 0.0;
      double ss = 0.0;
      bool first = true;
      for (double r : block) {
        y += r - m;
        ss += (r - m) * (r - m);
        if (first) {
          lo = hi = y;
          first = false;
        } else {
          lo = std::min(lo, y);
          hi = std::max(hi, y);
        }
      }
      const double sd = std::sqrt(ss / static_cast<double>(n));
      // mean subtraction leaves rounding residue on constant blocks
      if (sd > 1e-12 * std::abs(m)) {
        rs_sum += (hi - lo) / sd;
        ++rs_count;
      }
    }
    if (rs_count == 0) continue;
    log_n.push_back(std::log(static_cast<double>(n)));
    log_rs.push_back(std::log(rs_sum / static_cast<double>(rs_count)));
  }
  if (log_n.size() < 2) {
    throw DataError("R/S analysis degenerate: returns have zero variance in every block");
  }
  const auto fit = fit_line(log_n, log_rs);
  return {fit.slope, fit.slope_stderr, HurstMethod::rescaled_range};
}

}  // namespace trendlab
