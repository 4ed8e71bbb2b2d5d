#include <cmath>
#include <limits>

#include "doctest.h"
#include "trendlab/error.hpp"
#include "trendlab/optimizer.hpp"
#include "trendlab/rng.hpp"

using namespace trendlab;

namespace {

// Alternating up/down drift regimes of random length plus Gaussian noise.
Series regimes(std::size_t n, std::uint64_t seed, double drift, double sigma, int min_len = 200,
               int max_len = 600) {
  Rng rng(seed);
  std::vector<Quote> q;
  double log_price = std::log(1e6);
  int dir = 1, left = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (left == 0) {
      dir = -dir;
      left = static_cast<int>(rng.uniform_int(min_len, max_len));
    }
    --left;
    if (i > 0) log_price += dir * drift + sigma * rng.normal();
    q.push_back({946684800 + 300 * static_cast<std::int64_t>(i), std::llround(std::exp(log_price))});
  }
  return Series(InstrumentSpec{}, q, 300);
}

// Only the two pair-A memories vary; the gate is wide open and exits far.
SearchSpace pair_a_space() {
  return SearchSpace{{{{4, 16, 2},
                       {20, 60, 5},
                       {5, 5, 1},
                       {50, 50, 1},
                       {1, 1, 1},
                       {1000, 1000, 1},
                       {100000, 100000, 1},
                       {-100000, -100000, 1}}}};
}

class LoggingSamples final : public SampleAccess {
 public:
  LoggingSamples(Series in, Series out, Series live)
      : in_(std::move(in)), out_(std::move(out)), live_(std::move(live)) {}

  const Series& in_sample() override {
    log.push_back("in");
    return in_;
  }
  const Series& out_sample() override {
    log.push_back("out");
    return out_;
  }
  const Series& live_sample() override {
    log.push_back("live");
    return live_;
  }

  std::vector<std::string> log;

 private:
  Series in_, out_, live_;
};

LoggingSamples three_samples(double drift, std::uint64_t seed = 3) {
  Series s = regimes(60000, seed, drift, 3e-5);
  auto q = s.quotes();
  auto part = [&](std::size_t a, std::size_t b) {
    return Series(s.instrument(), {q.begin() + static_cast<std::ptrdiff_t>(a), q.begin() + static_cast<std::ptrdiff_t>(b)},
                  s.bar_seconds());
  };
  return LoggingSamples(part(0, 30000), part(30000, 45000), part(45000, 60000));
}

}  // namespace

TEST_CASE("parameter grids") {
  CHECK(ParamRange{2, 20, 2}.grid().size() == 10);
  CHECK(ParamRange{1, 1, 1}.grid() == std::vector<double>{1});
  CHECK(ParamRange{0, 0.3, 0.1}.grid().size() == 4);
  CHECK_THROWS_AS(ParamRange({2, 1, 1}).grid(), InvalidArgument);
  CHECK_THROWS_AS(ParamRange({0, 1, 0}).grid(), InvalidArgument);
  const auto d = SearchSpace::defaults();
  CHECK_NOTHROW(d.validate());
  CHECK(d.at({}).tau1 == 2);
  CHECK(d.at({}).loss_exit_bp == -300);
}

TEST_CASE("budget 1 returns the single evaluated candidate") {
  Series s = regimes(5000, 1, 5e-6, 3e-5);
  auto r = optimize(s, SearchSpace::defaults(), 1, 7);
  REQUIRE(r.trace.size() == 1);
  CHECK(r.best_params == r.trace[0].params);
  CHECK(r.best_sharpe == r.trace[0].sharpe);
  CHECK_THROWS_AS(optimize(s, SearchSpace::defaults(), 0, 7), InvalidArgument);
}

TEST_CASE("trace respects the budget and the search is deterministic") {
  Series s = regimes(8000, 2, 5e-6, 3e-5);
  for (std::size_t budget : {2ul, 7ul, 40ul}) {
    auto a = optimize(s, SearchSpace::defaults(), budget, 11);
    auto b = optimize(s, SearchSpace::defaults(), budget, 11);
    CHECK(a.trace.size() <= budget);
    CHECK(a.best_params == b.best_params);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
      CHECK(a.trace[i].params == b.trace[i].params);
      CHECK(a.trace[i].sharpe == b.trace[i].sharpe);
      CHECK_NOTHROW(a.trace[i].params.validate());
    }
    for (const auto& e : a.trace)
      if (e.sharpe) CHECK(*e.sharpe <= *a.best_sharpe);
  }
  OptimizeOptions serial;
  serial.threads = 1;
  auto c = optimize(s, SearchSpace::defaults(), 40, 11, serial);
  CHECK(c.best_params == optimize(s, SearchSpace::defaults(), 40, 11).best_params);
}

TEST_CASE("empty feasible space is an error") {
  Series s = regimes(3000, 1, 5e-6, 3e-5);
  SearchSpace sp = pair_a_space();
  sp.ranges[0] = {30, 40, 5};
  sp.ranges[1] = {10, 20, 5};  // tau1 > tau2 everywhere
  CHECK_THROWS_AS(optimize(s, sp, 10, 1), InvalidArgument);
}

TEST_CASE("planted optimum is recovered within 5 percent of its Sharpe") {
  Series s = regimes(60000, 5, 5e-6, 3e-5);
  const SearchSpace sp = pair_a_space();
  const StrategyParams planted = sp.at({3, 4, 0, 0, 0, 0, 0, 0});
  REQUIRE(planted.tau1 == 10);
  REQUIRE(planted.tau2 == 40);
  const auto ps = compute_metrics(run_backtest(s, planted, std::nullopt, 0), bars_per_year(300)).sharpe;
  REQUIRE(ps);
  REQUIRE(*ps > 0);
  auto r = optimize(s, sp, 60, 1);
  REQUIRE(r.best_sharpe);
  CHECK(*r.best_sharpe >= 0.95 * *ps);
}

TEST_CASE("optimize reads only the in-sample") {
  LoggingSamples data = three_samples(5e-6);
  auto r = optimize(data.in_sample(), pair_a_space(), 10, 1);
  CHECK(data.log == std::vector<std::string>{"in"});
  CHECK(!r.trace.empty());
}

TEST_CASE("guarded samples refuse out and live reads while optimizing") {
  LoggingSamples data = three_samples(5e-6);
  GuardedSamples guard(data);
  guard.enter(ProtocolStage::optimize);
  CHECK_NOTHROW(guard.in_sample());
  CHECK_THROWS_AS(guard.out_sample(), ProtocolViolation);
  CHECK_THROWS_AS(guard.live_sample(), ProtocolViolation);
  CHECK(data.log == std::vector<std::string>{"in"});
  CHECK(guard.log() == std::vector<std::string>{"optimize:in", "optimize:out denied", "optimize:live denied"});
  guard.enter(ProtocolStage::validate);
  CHECK_NOTHROW(guard.out_sample());
  CHECK_THROWS_AS(guard.live_sample(), ProtocolViolation);
}

TEST_CASE("protocol: optimize, gate, then live exactly once") {
  LoggingSamples data = three_samples(5e-6);
  GateThresholds t;
  auto r = run_protocol(data, pair_a_space(), 20, 9, t);
  REQUIRE(r.report.gate_decision == GateDecision::accepted);
  CHECK(r.report.live_sharpe);
  CHECK(r.report.live_evaluated);
  CHECK(r.access_log ==
        std::vector<std::string>{"optimize:in", "validate:in", "validate:out", "live:live"});
  CHECK(data.log == std::vector<std::string>{"in", "in", "out", "live"});
  CHECK(r.report.best_params == r.search.best_params);
}

TEST_CASE("validation refuses live evaluation before acceptance") {
  LoggingSamples data = three_samples(5e-6);
  StrategyParams p = pair_a_space().at({3, 4, 0, 0, 0, 0, 0, 0});
  GateThresholds strict;
  strict.min_out_sharpe = 1e9;
  ValidationSession session(data, p, strict, 1);
  CHECK_THROWS_AS(session.evaluate_live(), ProtocolViolation);
  CHECK(session.run_gate() == GateDecision::rejected_out_sample);
  CHECK_THROWS_AS(session.evaluate_live(), ProtocolViolation);
  CHECK_THROWS_AS(session.run_gate(), ProtocolViolation);
  CHECK(!session.report().live_sharpe);
  CHECK(std::find(data.log.begin(), data.log.end(), "live") == data.log.end());

  auto report = validate(p, data, strict, 1);
  CHECK(report.gate_decision == GateDecision::rejected_out_sample);
  CHECK(!report.live_sharpe);

  ValidationSession ok(data, p, GateThresholds{}, 1);
  REQUIRE(ok.run_gate() == GateDecision::accepted);
  CHECK(ok.evaluate_live());
  CHECK_THROWS_AS(ok.evaluate_live(), ProtocolViolation);
}

TEST_CASE("randomization gate") {
  LoggingSamples data = three_samples(5e-6);
  StrategyParams p = pair_a_space().at({3, 4, 0, 0, 0, 0, 0, 0});

  // Never trades: the in-sample Sharpe is undefined.
  StrategyParams idle = p;
  idle.vol_lo = 1e6;
  idle.vol_hi = 2e6;
  auto r = validate(idle, data, GateThresholds{}, 2);
  CHECK(r.gate_decision == GateDecision::rejected_randomization);
  CHECK(!r.in_sharpe);
  CHECK(!r.out_sharpe);

  // Demanding that the randomized Sharpe double the nominal one fails.
  GateThresholds t;
  t.max_randomized_degradation = -1.0;
  data.log.clear();
  r = validate(p, data, t, 2);
  REQUIRE(r.in_sharpe);
  REQUIRE(r.randomized_degradation);
  CHECK(*r.randomized_degradation ==
        doctest::Approx((*r.in_sharpe - *r.randomized_in_sharpe) / *r.in_sharpe));
  CHECK(r.gate_decision == GateDecision::rejected_randomization);
  CHECK(data.log == std::vector<std::string>{"in"});
}

TEST_CASE("weakening thresholds never turns acceptance into rejection") {
  for (std::uint64_t seed = 20; seed < 26; ++seed) {
    LoggingSamples data = three_samples(3e-6, seed);
    StrategyParams p = pair_a_space().at({3, 4, 0, 0, 0, 0, 0, 0});
    const GateThresholds base{0.5, 0.5};
    const auto a = validate(p, data, base, seed);
    for (const GateThresholds weaker : {GateThresholds{0.0, 0.5}, GateThresholds{0.5, 5.0},
                                        GateThresholds{-10.0, 100.0}}) {
      const auto b = validate(p, data, weaker, seed);
      if (a.gate_decision == GateDecision::accepted) CHECK(b.gate_decision == GateDecision::accepted);
    }
  }
}
