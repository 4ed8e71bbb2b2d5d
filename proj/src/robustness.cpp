#include "trendlab/robustness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "trendlab/error.hpp"
#include "trendlab/parallel.hpp"
#include "trendlab/rng.hpp"

namespace trendlab {

Series randomize_series(const Series& s, std::uint64_t seed) {
  const std::int64_t slip = s.instrument().slippage_bp;
  if (slip <= 0) throw InvalidArgument("randomization needs slippage_bp > 0");
  Rng rng(derive_seed(seed, "randomize"));
  std::vector<std::int64_t> closes;
  closes.reserve(s.size());
  for (const auto& q : s.quotes()) closes.push_back(std::max<std::int64_t>(1, q.close + rng.uniform_int(-10, 10) * slip));
  return s.with_closes(std::move(closes));
}

std::string_view to_string(StressFamily f) {
  switch (f) {
    case StressFamily::forced_exit: return "forced_exit";
    case StressFamily::skip_trade: return "skip_trade";
    case StressFamily::delay_fill: return "delay_fill";
    case StressFamily::adverse_fill: return "adverse_fill";
    case StressFamily::fee_multiplier: return "fee_multiplier";
  }
  return "?";
}

std::string StressComponent::label() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s(%g)", std::string(to_string(family)).c_str(), value);
  return buf;
}

Perturbation StressTest::perturbation() const {
  Perturbation p;
  for (const auto& c : components) {
    const auto whole = static_cast<std::int64_t>(c.value);
    switch (c.family) {
      case StressFamily::forced_exit:
        p.forced_exit_bars = p.forced_exit_bars ? std::min(*p.forced_exit_bars, whole) : whole;
        break;
      case StressFamily::skip_trade: p.skip_probabilities.push_back(c.value); break;
      case StressFamily::delay_fill: p.delay_bars += whole; break;
      case StressFamily::adverse_fill: p.adverse_slippage_multiple += whole; break;
      case StressFamily::fee_multiplier:
        p.fee_multiplier = p.fee_multiplier ? std::max(*p.fee_multiplier, whole) : whole;
        break;
    }
  }
  return p;
}

namespace {

constexpr std::array<StressComponent, 16> kSingles{{
    {StressFamily::forced_exit, 1},   {StressFamily::forced_exit, 5},
    {StressFamily::forced_exit, 20},  {StressFamily::forced_exit, 60},
    {StressFamily::skip_trade, 0.05}, {StressFamily::skip_trade, 0.10},
    {StressFamily::skip_trade, 0.20}, {StressFamily::skip_trade, 0.30},
    {StressFamily::delay_fill, 1},    {StressFamily::delay_fill, 2},
    {StressFamily::delay_fill, 3},    {StressFamily::delay_fill, 4},
    {StressFamily::adverse_fill, 1},  {StressFamily::adverse_fill, 2},
    {StressFamily::adverse_fill, 3},  {StressFamily::adverse_fill, 4},
}};

constexpr std::array<StressComponent, 8> kExtremes{{
    {StressFamily::skip_trade, 0.20},  {StressFamily::skip_trade, 0.30},
    {StressFamily::delay_fill, 3},     {StressFamily::delay_fill, 4},
    {StressFamily::adverse_fill, 3},   {StressFamily::adverse_fill, 4},
    {StressFamily::fee_multiplier, 6}, {StressFamily::fee_multiplier, 8},
}};

}  // namespace

StressTest stress_test(int id) {
  if (id < 0 || id >= kCatalogSize) throw InvalidArgument("stress test id out of range: " + std::to_string(id));
  if (id >= 120) return {id, {kExtremes[static_cast<std::size_t>(id - 120)]}};
  int k = 0;
  for (std::size_t i = 0; i < kSingles.size(); ++i)
    for (std::size_t j = i + 1; j < kSingles.size(); ++j, ++k)
      if (k == id) return {id, {kSingles[i], kSingles[j]}};
  throw InvalidArgument("unreachable stress id");
}

std::vector<StressTest> build_catalog() {
  std::vector<StressTest> out;
  out.reserve(kCatalogSize);
  for (int id = 0; id < kCatalogSize; ++id) out.push_back(stress_test(id));
  return out;
}

SharpeSpread SharpeSpread::from(std::vector<std::optional<double>> sharpes) {
  SharpeSpread s;
  s.sharpes = std::move(sharpes);
  double sum = 0.0;
  for (const auto& v : s.sharpes)
    if (v) {
      sum += *v;
      ++s.defined;
      s.min = s.min ? std::min(*s.min, *v) : *v;
    }
  if (s.defined == 0) return s;
  const double mean = sum / static_cast<double>(s.defined);
  double ss = 0.0;
  for (const auto& v : s.sharpes)
    if (v) ss += (*v - mean) * (*v - mean);
  s.mean = mean;
  s.rms = std::sqrt(ss / static_cast<double>(s.defined));
  return s;
}

namespace {

StressOutcome evaluate(const Series& s, const StrategyConfig& strategy, const std::optional<Perturbation>& p,
                       std::uint64_t seed, const BacktestOptions& options, int id,
                       std::vector<StressComponent> components) {
  StressOutcome out;
  out.id = id;
  out.components = std::move(components);
  try {
    const Ledger l = run_backtest(s, strategy, p, seed, options);
    const Metrics m = compute_metrics(l, bars_per_year(s.bar_seconds()));
    out.sharpe = m.sharpe;
    out.total_net_bp = m.total_net_bp;
    out.n_trades = m.n_trades;
    out.violations = ledger_violations(l);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

BatteryRun run_on(const Series& s, const StrategyConfig& strategy, std::uint64_t seed,
                  const BatteryOptions& options, const std::vector<StressTest>& catalog) {
  BatteryRun run;
  run.nominal = evaluate(s, strategy, std::nullopt, seed, options.backtest, -1, {});
  run.tests.resize(catalog.size());
  parallel_for(catalog.size(), options.threads, [&](std::size_t i) {
    const StressTest& t = catalog[i];
    run.tests[i] = evaluate(s, strategy, t.perturbation(),
                            derive_seed(seed, "stress", static_cast<std::uint64_t>(t.id)), options.backtest,
                            t.id, t.components);
  });
  std::vector<std::optional<double>> sharpes;
  for (const auto& t : run.tests) sharpes.push_back(t.sharpe);
  run.spread = SharpeSpread::from(std::move(sharpes));
  return run;
}

}  // namespace

BatteryReport run_battery(const Series& s, const StrategyConfig& strategy, std::uint64_t seed,
                          const BatteryOptions& options) {
  std::visit([](const auto& p) { p.validate(); }, strategy);
  const auto catalog = build_catalog();
  BatteryReport report;
  report.original = run_on(s, strategy, seed, options, catalog);
  if (options.randomized) report.randomized = run_on(randomize_series(s, seed), strategy, seed, options, catalog);
  return report;
}

}  // namespace trendlab
