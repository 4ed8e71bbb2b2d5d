#pragma once

// Randomized engine property checks shared by the unit tests and the
// acceptance runner.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trendlab/engine.hpp"
#include "trendlab/rng.hpp"
#include "trendlab/synthdata.hpp"

namespace trendlab::testing {

struct RandomCase {
  Series series;
  StrategyConfig strategy;
  std::optional<Perturbation> perturbation;
  std::uint64_t seed;
  BacktestOptions options;
};

inline RandomCase random_case(std::uint64_t case_seed) {
  Rng rng(derive_seed(case_seed, "engine-property"));
  GeneratorSpec g;
  g.kind = rng.uniform01() < 0.5 ? GeneratorKind::gaussian_walk : GeneratorKind::trending;
  g.n_bars = static_cast<std::size_t>(rng.uniform_int(800, 3000));
  g.seed = rng.next_u64();
  g.sigma = 2e-5 + 1e-4 * rng.uniform01();
  g.drift = g.kind == GeneratorKind::trending ? (rng.uniform01() - 0.5) * 2e-5 : 0.0;
  g.start_time = 946684800 + 300 * rng.uniform_int(0, 1000);
  InstrumentSpec inst;
  inst.slippage_bp = rng.uniform_int(0, 3);
  inst.fee_multiplier = rng.uniform_int(1, 3);
  Series s = generate(g, inst);

  BacktestOptions opt;
  opt.vol_window_bars = static_cast<std::size_t>(rng.uniform_int(10, 60));
  opt.pnl_window_bars = static_cast<std::size_t>(rng.uniform_int(20, 300));

  StrategyConfig strategy;
  if (rng.uniform01() < 0.3) {
    BaselineParams b;
    b.tau_bars = 2 + 30 * rng.uniform01();
    b.phi = (0.5 + 3 * rng.uniform01()) * g.sigma * std::sqrt(b.tau_bars);
    if (rng.uniform01() < 0.5) b.break_threshold = b.phi * (0.1 + 0.8 * rng.uniform01());
    strategy = b;
  } else {
    StrategyParams p;
    p.tau1 = 2 + 15 * rng.uniform01();
    p.tau2 = p.tau1 + 1 + 50 * rng.uniform01();
    p.tau3 = 2 + 15 * rng.uniform01();
    p.tau4 = p.tau3 + 1 + 50 * rng.uniform01();
    const double typical = g.sigma * 1e6;
    p.vol_lo = typical * 0.8 * rng.uniform01();
    p.vol_hi = p.vol_lo + typical * (0.1 + rng.uniform01());
    p.profit_exit_bp = rng.uniform_int(20, 400);
    p.loss_exit_bp = -rng.uniform_int(20, 400);
    strategy = p;
  }

  std::optional<Perturbation> pert;
  if (rng.uniform01() < 0.6) {
    Perturbation x;
    if (rng.uniform01() < 0.3) x.forced_exit_bars = rng.uniform_int(1, 60);
    if (rng.uniform01() < 0.3) x.skip_probabilities.push_back(0.3 * rng.uniform01());
    if (rng.uniform01() < 0.3) x.delay_bars = rng.uniform_int(1, 4);
    if (rng.uniform01() < 0.3) x.adverse_slippage_multiple = rng.uniform_int(1, 4);
    if (rng.uniform01() < 0.3) x.fee_multiplier = rng.uniform_int(3, 8);
    pert = x;
  }
  return {std::move(s), strategy, pert, rng.next_u64(), opt};
}

struct PropertyFailures {
  std::vector<std::string> determinism, accounting, prefix, fee_monotonicity;
  std::size_t trades = 0;

  bool ok() const {
    return determinism.empty() && accounting.empty() && prefix.empty() && fee_monotonicity.empty();
  }
};

inline void check_engine_properties(std::uint64_t case_seed, PropertyFailures& f) {
  const RandomCase c = random_case(case_seed);
  const std::string tag = "case " + std::to_string(case_seed) + ": ";
  const Ledger a = run_backtest(c.series, c.strategy, c.perturbation, c.seed, c.options);
  f.trades += a.trades.size();

  const Ledger b = run_backtest(c.series, c.strategy, c.perturbation, c.seed, c.options);
  if (!(a == b) || equity_csv(a) != equity_csv(b) || trades_csv(a) != trades_csv(b) ||
      metrics_json(a, compute_metrics(a, 252 * 288)) != metrics_json(b, compute_metrics(b, 252 * 288)))
    f.determinism.push_back(tag + "repeat run differs");

  for (const auto& v : ledger_violations(a)) f.accounting.push_back(tag + v);
  std::int64_t total = 0;
  for (const auto& t : a.trades) total += t.net_bp;
  if (a.equity.empty() || a.equity.back().cum_net_bp != total)
    f.accounting.push_back(tag + "final equity differs from sum of net");

  // Prefix runs agree on every trade closed before the cut.
  Rng rng(derive_seed(case_seed, "prefix-cut"));
  const std::size_t warm = warmup_bars(c.strategy, c.options);
  for (int rep = 0; rep < 2; ++rep) {
    const auto m = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(warm) + 1, static_cast<std::int64_t>(c.series.size())));
    const auto quotes = c.series.quotes();
    Series prefix(c.series.instrument(), {quotes.begin(), quotes.begin() + static_cast<std::ptrdiff_t>(m)},
                  c.series.bar_seconds());
    const Ledger p = run_backtest(prefix, c.strategy, c.perturbation, c.seed, c.options);
    std::size_t closed = p.trades.size();
    if (closed > 0 && p.trades.back().exit_reason == ExitReason::end_of_data) --closed;
    if (closed > a.trades.size() || !std::equal(p.trades.begin(), p.trades.begin() + closed, a.trades.begin()))
      f.prefix.push_back(tag + "trades before cut " + std::to_string(m) + " differ");
    if (!std::equal(p.equity.begin(), p.equity.end() - 1, a.equity.begin()))
      f.prefix.push_back(tag + "equity before cut " + std::to_string(m) + " differs");
  }

  // A higher fee never raises the net of a trade that occurs in both runs.
  Perturbation higher = c.perturbation.value_or(Perturbation{});
  const std::int64_t base =
      std::max(c.series.instrument().fee_multiplier, higher.fee_multiplier.value_or(0));
  higher.fee_multiplier = base + 1 + rng.uniform_int(0, 4);
  const Ledger h = run_backtest(c.series, c.strategy, higher, c.seed, c.options);
  if (h.round_trip_fee_bp < a.round_trip_fee_bp) f.fee_monotonicity.push_back(tag + "fee decreased");
  std::size_t j = 0;
  for (const auto& t : h.trades) {
    while (j < a.trades.size() && a.trades[j].entry_time < t.entry_time) ++j;
    if (j < a.trades.size() && a.trades[j].entry_time == t.entry_time &&
        a.trades[j].exit_time == t.exit_time && a.trades[j].direction == t.direction &&
        t.net_bp > a.trades[j].net_bp)
      f.fee_monotonicity.push_back(tag + "trade net rose with the fee");
  }
  // Signals see only the nominal fee, so the trade sequences coincide.
  if (h.trades.size() != a.trades.size()) f.fee_monotonicity.push_back(tag + "trade count changed with the fee");
  for (std::size_t i = 0; i < std::min(h.trades.size(), a.trades.size()); ++i)
    if (h.trades[i].net_bp != a.trades[i].net_bp - (h.round_trip_fee_bp - a.round_trip_fee_bp))
      f.fee_monotonicity.push_back(tag + "net not shifted by the fee difference");
}

}  // namespace trendlab::testing
