#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "trendlab/engine.hpp"
#include "trendlab/optimizer.hpp"
#include "trendlab/series.hpp"

namespace trendlab {

// JSON run configuration. Every section is optional; unknown keys are
// rejected so typos do not silently fall back to defaults.
//
//   {
//     "instrument": "EC" | "FDAX" | {"name", "tick_value", "slippage_bp", "fee_multiplier"},
//     "bar_seconds": 300,
//     "strategy": {"tau1", "tau2", "tau3", "tau4", "vol_lo", "vol_hi",
//                  "profit_exit_bp", "loss_exit_bp"},
//     "baseline": {"tau_bars", "phi", "break_threshold"},
//     "backtest": {"vol_window_bars", "pnl_window_bars"},
//     "search_space": {"tau1": [lo, hi, step], ...},
//     "split": {"in": [start, end], "out": [start, end], "live": [start, end]},
//     "gate": {"min_out_sharpe", "max_randomized_degradation"}
//   }
struct RunConfig {
  InstrumentSpec instrument;
  std::int64_t bar_seconds = 300;
  std::optional<StrategyConfig> strategy;
  std::optional<SearchSpace> search_space;
  std::optional<SampleSplit> split;
  BacktestOptions backtest;
  GateThresholds gate;

  // Canonical JSON text; the basis of config digests.
  std::string canonical_json() const;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// Standalone files for the --split and --space flags; either the bare
// object or a document with a "split" / "search_space" key.
SampleSplit parse_split(std::string_view json_text);
SearchSpace parse_search_space(std::string_view json_text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace trendlab
