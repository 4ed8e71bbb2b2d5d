#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trendlab/series.hpp"
#include "trendlab/strategy.hpp"

namespace trendlab {

enum class ExitReason { crossing, vol_gate, profit_extreme, loss_extreme, forced_exit, end_of_data };

std::string_view to_string(ExitReason r);
ExitReason parse_exit_reason(std::string_view text);

struct Trade {
  std::int64_t entry_time = 0;
  std::int64_t exit_time = 0;
  Position direction = Position::long_side;
  std::int64_t entry_price = 0;
  std::int64_t exit_price = 0;
  std::int64_t gross_bp = 0;
  std::int64_t net_bp = 0;
  std::int64_t duration_bars = 0;
  ExitReason exit_reason = ExitReason::crossing;

  friend bool operator==(const Trade&, const Trade&) = default;
};

// Round trip of one contract: gross = direction x (exit - entry) ticks,
// net = gross - round-trip fee.
Trade settle_trade(Position direction, std::int64_t entry_price, std::int64_t exit_price,
                   std::int64_t round_trip_fee_bp);

struct EquityPoint {
  std::int64_t timestamp = 0;
  std::int64_t cum_net_bp = 0;

  friend bool operator==(const EquityPoint&, const EquityPoint&) = default;
};

struct Ledger {
  std::vector<Trade> trades;
  std::vector<EquityPoint> equity;  // one point per bar, realized plus open mark net of fee
  std::string config_digest;
  std::int64_t round_trip_fee_bp = 0;
  std::int64_t bar_seconds = 0;

  friend bool operator==(const Ledger&, const Ledger&) = default;
};

// Execution perturbations. Settings of one family combine as: forced exit
// takes the tightest horizon, skip probabilities draw independently, delays
// and adverse offsets add, fee multiplier takes the largest.
struct Perturbation {
  std::optional<std::int64_t> forced_exit_bars;   // close trades held this many bars
  std::vector<double> skip_probabilities;         // each entry skipped with probability p
  std::int64_t delay_bars = 0;                    // fills happen this many bars after the intent
  std::int64_t adverse_slippage_multiple = 0;     // each fill worsened by multiple x slippage ticks
  std::optional<std::int64_t> fee_multiplier;     // effective = max(instrument multiplier, this)

  bool empty() const;
  void validate() const;
  std::string canonical_string() const;
  friend bool operator==(const Perturbation&, const Perturbation&) = default;
};

struct BacktestOptions {
  std::size_t vol_window_bars = 48;
  std::size_t pnl_window_bars = 288;

  friend bool operator==(const BacktestOptions&, const BacktestOptions&) = default;
};

std::size_t warmup_bars(const StrategyConfig& config, const BacktestOptions& options);

Ledger run_backtest(const Series& s, const StrategyConfig& strategy,
                    const std::optional<Perturbation>& perturbation, std::uint64_t seed,
                    const BacktestOptions& options = {});

std::string config_digest(const Series& s, const StrategyConfig& strategy,
                          const std::optional<Perturbation>& perturbation, std::uint64_t seed,
                          const BacktestOptions& options);

// Accounting and ordering checks; returns a description of every violation.
std::vector<std::string> ledger_violations(const Ledger& l);

struct Metrics {
  std::optional<double> sharpe;  // undefined with fewer than two days or zero variance
  std::int64_t total_net_bp = 0;
  std::int64_t n_trades = 0;
  double mean_trade_bp = 0.0;
  double rms_trade_bp = 0.0;  // population standard deviation of net_bp
  double mean_duration_bars = 0.0;
  double net_bp_per_year = 0.0;
  std::int64_t n_days = 0;
  std::map<std::int64_t, std::int64_t> return_histogram;    // 1 bp bins
  std::map<std::int64_t, std::int64_t> duration_histogram;  // 1 bar bins
};

inline constexpr std::string_view kSharpeConvention =
    "daily closed-trade net bp by UTC calendar day over all days spanned by the equity curve; "
    "mean / sample stddev * sqrt(252)";

Metrics compute_metrics(const Ledger& l, double bars_per_year);

// 252 trading days of round-the-clock bars.
double bars_per_year(std::int64_t bar_seconds);

std::string equity_csv(const Ledger& l);
std::string trades_csv(const Ledger& l);
std::string metrics_json(const Ledger& l, const Metrics& m);

// Writes equity.csv, trades.csv and metrics.json into `dir` (created if needed).
void export_report(const Ledger& l, const Metrics& m, const std::filesystem::path& dir);

std::vector<Trade> parse_trades_csv(std::string_view text);
std::vector<Trade> read_trades_csv(const std::filesystem::path& path);

}  // namespace trendlab
