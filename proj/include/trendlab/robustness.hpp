#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trendlab/engine.hpp"

namespace trendlab {

// Adds an independent uniform integer offset in [-10, 10] x slippage ticks
// to every close, clamped to at least one tick. Requires slippage > 0.
Series randomize_series(const Series& s, std::uint64_t seed);

enum class StressFamily { forced_exit, skip_trade, delay_fill, adverse_fill, fee_multiplier };

std::string_view to_string(StressFamily f);

struct StressComponent {
  StressFamily family;
  double value;  // bars, probability, bars, slippage multiple, fee multiplier

  std::string label() const;
  friend bool operator==(const StressComponent&, const StressComponent&) = default;
};

struct StressTest {
  int id = 0;
  std::vector<StressComponent> components;

  Perturbation perturbation() const;
  friend bool operator==(const StressTest&, const StressTest&) = default;
};

// Generation rule. The 16 single settings, in order
//   forced_exit {1, 5, 20, 60} bars, skip_trade {5, 10, 20, 30}%,
//   delay_fill {1, 2, 3, 4} bars, adverse_fill {1, 2, 3, 4} x slippage,
// give ids 0..119 as all pairs (i < j) in lexicographic order. Ids 120..127
// are single extremes: skip_trade {20, 30}%, delay_fill {3, 4},
// adverse_fill {3, 4}, fee_multiplier {6, 8}.
inline constexpr int kCatalogSize = 128;
std::vector<StressTest> build_catalog();
StressTest stress_test(int id);

struct SharpeSpread {
  std::vector<std::optional<double>> sharpes;  // one per test, in id order
  std::optional<double> mean;  // over defined values
  std::optional<double> rms;   // population stddev over defined values
  std::optional<double> min;
  std::size_t defined = 0;

  static SharpeSpread from(std::vector<std::optional<double>> sharpes);
};

struct StressOutcome {
  int id = -1;  // -1 for the unperturbed run
  std::vector<StressComponent> components;
  std::optional<double> sharpe;
  std::int64_t total_net_bp = 0;
  std::int64_t n_trades = 0;
  std::vector<std::string> violations;  // ledger accounting problems
  std::optional<std::string> error;     // engine error, if the run failed
};

struct BatteryRun {
  StressOutcome nominal;
  std::vector<StressOutcome> tests;
  SharpeSpread spread;
};

struct BatteryReport {
  BatteryRun original;
  std::optional<BatteryRun> randomized;  // same battery on randomize_series(s)
};

struct BatteryOptions {
  bool randomized = false;
  unsigned threads = 0;  // 0 = hardware concurrency
  BacktestOptions backtest;
};

// Seeds: the unperturbed run uses `seed`, test `id` uses
// derive_seed(seed, "stress", id); the randomized battery runs on
// randomize_series(s, seed). Engine errors are recorded per test.
BatteryReport run_battery(const Series& s, const StrategyConfig& strategy, std::uint64_t seed,
                          const BatteryOptions& options = {});

}  // namespace trendlab
