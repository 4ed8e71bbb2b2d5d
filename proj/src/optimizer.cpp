#include "trendlab/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "trendlab/error.hpp"
#include "trendlab/parallel.hpp"
#include "trendlab/robustness.hpp"
#include "trendlab/rng.hpp"

namespace trendlab {

std::vector<double> ParamRange::grid() const {
  if (!(std::isfinite(lo) && std::isfinite(hi) && std::isfinite(step)) || step <= 0.0 || lo > hi)
    throw InvalidArgument("parameter range needs finite lo <= hi and step > 0");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + static_cast<double>(i) * step;
  return out;
}

SearchSpace SearchSpace::defaults() {
  return SearchSpace{{{
      {2, 20, 2},       // tau1
      {20, 120, 10},    // tau2
      {2, 30, 4},       // tau3
      {30, 210, 20},    // tau4
      {1, 20, 1},       // vol_lo
      {20, 100, 10},    // vol_hi
      {50, 500, 50},    // profit_exit_bp
      {-300, -25, 25},  // loss_exit_bp
  }}};
}

void SearchSpace::validate() const {
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    try {
      ranges[i].grid();
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(std::string(kNames[i]) + ": " + e.what());
    }
  }
}

StrategyParams SearchSpace::at(const std::array<std::size_t, 8>& index) const {
  std::array<double, 8> v{};
  for (std::size_t i = 0; i < 8; ++i) {
    const auto& r = ranges[i];
    v[i] = r.lo + static_cast<double>(index[i]) * r.step;
  }
  StrategyParams p;
  p.tau1 = v[0];
  p.tau2 = v[1];
  p.tau3 = v[2];
  p.tau4 = v[3];
  p.vol_lo = v[4];
  p.vol_hi = v[5];
  p.profit_exit_bp = std::llround(v[6]);
  p.loss_exit_bp = std::llround(v[7]);
  return p;
}

namespace {

using Index = std::array<std::size_t, 8>;

bool feasible(const StrategyParams& p) {
  try {
    p.validate();
    return true;
  } catch (const InvalidArgument&) {
    return false;
  }
}

bool better(const std::optional<double>& a, const std::optional<double>& b) {
  return a && (!b || *a > *b);
}

class Search {
 public:
  Search(const Series& s, const SearchSpace& space, std::size_t budget, std::uint64_t seed,
         const OptimizeOptions& options)
      : s_(s), space_(space), budget_(budget), seed_(seed), options_(options) {
    for (std::size_t i = 0; i < 8; ++i) sizes_[i] = space.ranges[i].grid().size();
  }

  OptimizeResult run() {
    std::vector<Index> coarse = coarse_candidates();
    if (coarse.empty()) throw InvalidArgument("search space has no feasible candidate");
    const std::size_t coarse_budget = std::max<std::size_t>(1, budget_ / 2);
    if (coarse.size() > coarse_budget) {
      Rng rng(derive_seed(seed_, "optimize-coarse"));
      for (std::size_t i = 0; i < coarse_budget; ++i) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(coarse.size()) - 1));
        std::swap(coarse[i], coarse[j]);
      }
      coarse.resize(coarse_budget);
      std::sort(coarse.begin(), coarse.end());
    }
    evaluate(coarse);

    Index stride{};
    for (std::size_t i = 0; i < 8; ++i) stride[i] = std::max<std::size_t>(1, (sizes_[i] - 1 + 3) / 4);
    while (result_.trace.size() < budget_) {
      std::vector<Index> around;
      for (std::size_t i = 0; i < 8; ++i)
        for (int dir : {-1, 1}) {
          Index c = best_;
          if (dir < 0 && c[i] < stride[i]) c[i] = 0;
          else if (dir > 0) c[i] = std::min(sizes_[i] - 1, c[i] + stride[i]);
          else c[i] -= stride[i];
          if (c == best_ || seen_.count(c) || !feasible(space_.at(c))) continue;
          if (std::find(around.begin(), around.end(), c) == around.end()) around.push_back(c);
        }
      around.resize(std::min(around.size(), budget_ - result_.trace.size()));
      const bool improved = evaluate(around);
      if (improved) continue;
      if (std::all_of(stride.begin(), stride.end(), [](std::size_t v) { return v == 1; })) break;
      for (auto& v : stride) v = std::max<std::size_t>(1, v / 2);
    }
    result_.best_params = space_.at(best_);
    return std::move(result_);
  }

 private:
  std::vector<Index> coarse_candidates() const {
    std::array<std::vector<std::size_t>, 8> levels;
    for (std::size_t i = 0; i < 8; ++i) {
      const std::size_t m = sizes_[i];
      levels[i] = {0};
      if (m > 2) levels[i].push_back((m - 1) / 2);
      if (m > 1) levels[i].push_back(m - 1);
    }
    std::vector<Index> out;
    Index pos{};
    std::array<std::size_t, 8> digit{};
    while (true) {
      for (std::size_t i = 0; i < 8; ++i) pos[i] = levels[i][digit[i]];
      if (feasible(space_.at(pos))) out.push_back(pos);
      std::size_t i = 8;
      while (i > 0) {
        --i;
        if (++digit[i] < levels[i].size()) break;
        digit[i] = 0;
        if (i == 0) return out;
      }
    }
  }

  // Evaluates a batch in parallel and appends it to the trace in order.
  // Returns true when the best candidate changed.
  bool evaluate(const std::vector<Index>& batch) {
    std::vector<Evaluation> evals(batch.size());
    parallel_for(batch.size(), options_.threads, [&](std::size_t i) {
      Evaluation& e = evals[i];
      e.params = space_.at(batch[i]);
      try {
        const Ledger l = run_backtest(s_, e.params, std::nullopt, seed_, options_.backtest);
        const Metrics m = compute_metrics(l, bars_per_year(s_.bar_seconds()));
        e.sharpe = m.sharpe;
        e.total_net_bp = m.total_net_bp;
        e.n_trades = m.n_trades;
      } catch (const InvalidArgument&) {
        // e.g. warm-up longer than the sample: ranks as undefined
      }
    });
    bool improved = false;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      seen_.insert(batch[i]);
      const bool first = result_.trace.empty();
      if (first || better(evals[i].sharpe, result_.best_sharpe)) {
        improved = improved || !first;
        best_ = batch[i];
        result_.best_sharpe = evals[i].sharpe;
      }
      result_.trace.push_back(std::move(evals[i]));
    }
    return improved;
  }

  const Series& s_;
  const SearchSpace& space_;
  std::size_t budget_;
  std::uint64_t seed_;
  OptimizeOptions options_;
  Index sizes_{};
  Index best_{};
  std::set<Index> seen_;
  OptimizeResult result_;
};

}  // namespace

OptimizeResult optimize(const Series& in_series, const SearchSpace& space, std::size_t budget,
                        std::uint64_t seed, const OptimizeOptions& options) {
  if (budget == 0) throw InvalidArgument("optimizer budget must be at least 1");
  space.validate();
  return Search(in_series, space, budget, seed, options).run();
}

SplitSamples::SplitSamples(const Series& s, const SampleSplit& sp)
    : SplitSamples(split(s, sp)) {}

SplitSamples::SplitSamples(std::tuple<Series, Series, Series> parts)
    : in_(std::move(std::get<0>(parts))),
      out_(std::move(std::get<1>(parts))),
      live_(std::move(std::get<2>(parts))) {}

std::string_view to_string(ProtocolStage s) {
  switch (s) {
    case ProtocolStage::idle: return "idle";
    case ProtocolStage::optimize: return "optimize";
    case ProtocolStage::validate: return "validate";
    case ProtocolStage::live: return "live";
  }
  return "?";
}

void GuardedSamples::record(std::string_view sample, bool allowed) {
  std::string entry = std::string(to_string(stage_)) + ":" + std::string(sample);
  if (!allowed) entry += " denied";
  log_.push_back(entry);
  if (!allowed)
    throw ProtocolViolation(std::string(sample) + "-sample read during " + std::string(to_string(stage_)));
}

const Series& GuardedSamples::in_sample() {
  record("in", true);
  return inner_.in_sample();
}

const Series& GuardedSamples::out_sample() {
  record("out", stage_ == ProtocolStage::validate || stage_ == ProtocolStage::live);
  return inner_.out_sample();
}

const Series& GuardedSamples::live_sample() {
  record("live", stage_ == ProtocolStage::live);
  return inner_.live_sample();
}

std::string_view to_string(GateDecision d) {
  switch (d) {
    case GateDecision::accepted: return "accepted";
    case GateDecision::rejected_out_sample: return "rejected_out_sample";
    case GateDecision::rejected_randomization: return "rejected_randomization";
  }
  return "?";
}

ValidationSession::ValidationSession(SampleAccess& data, StrategyParams params, GateThresholds thresholds,
                                     std::uint64_t seed, BacktestOptions options)
    : data_(data), thresholds_(thresholds), seed_(seed), options_(options) {
  params.validate();
  report_.best_params = params;
}

std::optional<double> ValidationSession::sharpe_on(const Series& s) const {
  const Ledger l = run_backtest(s, report_.best_params, std::nullopt, seed_, options_);
  return compute_metrics(l, bars_per_year(s.bar_seconds())).sharpe;
}

GateDecision ValidationSession::run_gate() {
  if (gate_done_) throw ProtocolViolation("validation gate already run");
  gate_done_ = true;
  const Series& in = data_.in_sample();
  report_.in_sharpe = sharpe_on(in);
  report_.randomized_in_sharpe = sharpe_on(randomize_series(in, derive_seed(seed_, "validate")));
  if (report_.in_sharpe && *report_.in_sharpe > 0.0) {
    report_.randomized_degradation =
        report_.randomized_in_sharpe
            ? (*report_.in_sharpe - *report_.randomized_in_sharpe) / *report_.in_sharpe
            : std::numeric_limits<double>::infinity();
  }
  if (!report_.randomized_degradation || *report_.randomized_degradation > thresholds_.max_randomized_degradation) {
    report_.gate_decision = GateDecision::rejected_randomization;
    return report_.gate_decision;
  }
  report_.out_sharpe = sharpe_on(data_.out_sample());
  report_.gate_decision = report_.out_sharpe && *report_.out_sharpe >= thresholds_.min_out_sharpe
                              ? GateDecision::accepted
                              : GateDecision::rejected_out_sample;
  return report_.gate_decision;
}

std::optional<double> ValidationSession::evaluate_live() {
  if (!gate_done_) throw ProtocolViolation("live evaluation before the validation gate");
  if (report_.gate_decision != GateDecision::accepted)
    throw ProtocolViolation("live evaluation of a system rejected by the gate");
  if (report_.live_evaluated) throw ProtocolViolation("live sample already evaluated");
  report_.live_evaluated = true;
  report_.live_sharpe = sharpe_on(data_.live_sample());
  return report_.live_sharpe;
}

ValidationReport validate(const StrategyParams& params, SampleAccess& data, const GateThresholds& thresholds,
                          std::uint64_t seed, const BacktestOptions& options) {
  ValidationSession session(data, params, thresholds, seed, options);
  if (session.run_gate() == GateDecision::accepted) session.evaluate_live();
  return session.report();
}

ProtocolResult run_protocol(SampleAccess& data, const SearchSpace& space, std::size_t budget,
                            std::uint64_t seed, const GateThresholds& thresholds,
                            const OptimizeOptions& options) {
  GuardedSamples guard(data);
  ProtocolResult out;
  guard.enter(ProtocolStage::optimize);
  out.search = optimize(guard.in_sample(), space, budget, derive_seed(seed, "optimize"), options);

  guard.enter(ProtocolStage::validate);
  ValidationSession session(guard, out.search.best_params, thresholds, derive_seed(seed, "validate"),
                            options.backtest);
  if (session.run_gate() == GateDecision::accepted) {
    guard.enter(ProtocolStage::live);
    session.evaluate_live();
  }
  out.report = session.report();
  out.access_log = guard.log();
  return out;
}

}  // namespace trendlab
