#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trendlab/series.hpp"

namespace trendlab {

// Exponentially weighted running sum of returns with memory tau (bars):
// one step multiplies the value by exp(-1/tau) and adds the new return.
// The kernel is unnormalized, so a constant return r settles at
// r / (1 - exp(-1/tau)).
class EmaState {
 public:
  explicit EmaState(double tau_bars, double value = 0.0);

  double tau_bars() const { return tau_; }
  double value() const { return value_; }
  double decay() const { return decay_; }

  friend bool operator==(const EmaState&, const EmaState&) = default;

 private:
  double tau_;
  double decay_;
  double value_;

  friend EmaState ema_step(const EmaState&, double);
};

EmaState ema_step(const EmaState& state, double ret);

// Value after each return, starting from 0.
std::vector<double> ema_trajectory(std::span<const double> returns, double tau_bars);

// Trailing sample standard deviation over `window` values ending at each
// index; entries before index window-1 are NaN.
std::vector<double> rolling_stddev(std::span<const double> values, std::size_t window);

struct RollingVolatility {
  // values[k] is in basis points (ticks): stddev of the last `window` one-bar
  // log returns ending at bar k, scaled by close[k].
  std::vector<double> values;
  std::size_t warmup = 0;  // values[0 .. warmup) are NaN

  bool usable(std::size_t k) const { return k >= warmup && k < values.size(); }
};

RollingVolatility rolling_volatility(const Series& s, std::size_t window_bars);

enum class CrossDirection { up, down };

struct Crossing {
  std::size_t index;
  CrossDirection direction;

  friend bool operator==(const Crossing&, const Crossing&) = default;
};

// Sign changes of fast - slow. Exact ties produce no event; the crossing is
// reported at the next bar with a nonzero difference of opposite sign.
std::vector<Crossing> detect_crossings(std::span<const double> fast, std::span<const double> slow);

// Uniform-window moving average; entries before index window-1 are NaN.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

struct CrossingDensityEstimate {
  std::size_t t1_bars = 0;
  std::size_t t2_bars = 0;
  double delta_t = 0.0;      // (t2 - t1) / t1
  double density = 0.0;      // crossings per usable bar
  std::size_t crossings = 0;
  std::size_t usable_bars = 0;
  double hurst_implied = 0.0;  // from the log-log slope over a t1 family sharing t2
  double slope_stderr = 0.0;
  bool low_confidence = false;  // fewer than 100 * t2 bars
};

struct CrossingScanPoint {
  std::size_t t1_bars;
  double delta_t;
  double density;
};

struct CrossingScan {
  std::size_t t2_bars = 0;
  std::vector<CrossingScanPoint> points;
  double slope = 0.0;      // d log(density) / d log(dT (1 - dT)); equals H - 1
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double hurst = 0.0;
  bool low_confidence = false;
};

// Default t1 family for a given t2: up to 9 values in (t2/2, t2), so that
// 0 < dT < 1 and dT (1 - dT) > 0.
std::vector<std::size_t> default_t1_family(std::size_t t2_bars);

// Density of crossings between plain moving averages of length t1 and t2
// over `path`, together with the scan over default_t1_family(t2).
CrossingDensityEstimate crossing_density(std::span<const double> path, std::size_t t1_bars,
                                         std::size_t t2_bars);
CrossingDensityEstimate crossing_density(const Series& s, std::size_t t1_bars,
                                         std::size_t t2_bars);

CrossingScan crossing_density_scan(std::span<const double> path, std::size_t t2_bars,
                                   std::span<const std::size_t> t1_values);

enum class HurstMethod { rescaled_range };

struct HurstEstimate {
  double h = 0.0;
  double std_error = 0.0;
  HurstMethod method = HurstMethod::rescaled_range;
};

// Classical rescaled-range estimate over dyadic block sizes 16 .. len/4.
HurstEstimate hurst_rescaled_range(std::span<const double> returns);

}  // namespace trendlab
