#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "trendlab/engine.hpp"

namespace trendlab {

// Inclusive grid lo, lo + step, ..., <= hi.
struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
  double step = 1.0;

  std::vector<double> grid() const;
  friend bool operator==(const ParamRange&, const ParamRange&) = default;
};

// Grids for the eight StrategyParams fields, in declaration order.
struct SearchSpace {
  static constexpr std::array<std::string_view, 8> kNames{
      "tau1", "tau2", "tau3", "tau4", "vol_lo", "vol_hi", "profit_exit_bp", "loss_exit_bp"};

  std::array<ParamRange, 8> ranges;

  static SearchSpace defaults();
  void validate() const;
  // Candidate at grid indices; exit thresholds are rounded to whole bp.
  StrategyParams at(const std::array<std::size_t, 8>& index) const;
};

struct Evaluation {
  StrategyParams params;
  std::optional<double> sharpe;  // undefined ranks below every defined value
  std::int64_t total_net_bp = 0;
  std::int64_t n_trades = 0;
};

struct OptimizeResult {
  StrategyParams best_params;
  std::optional<double> best_sharpe;
  std::vector<Evaluation> trace;  // in evaluation order, size <= budget
};

struct OptimizeOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
  BacktestOptions backtest;
};

// Coarse grid (every parameter at its first, middle and last grid value;
// sampled down to budget/2 candidates with the seed when larger), then
// coordinate refinement around the best candidate with halving strides.
// Infeasible combinations are never evaluated.
OptimizeResult optimize(const Series& in_series, const SearchSpace& space, std::size_t budget,
                        std::uint64_t seed, const OptimizeOptions& options = {});

// Source of the three sub-samples. Implementations may log or restrict access.
class SampleAccess {
 public:
  virtual ~SampleAccess() = default;
  virtual const Series& in_sample() = 0;
  virtual const Series& out_sample() = 0;
  virtual const Series& live_sample() = 0;
};

class SplitSamples final : public SampleAccess {
 public:
  SplitSamples(const Series& s, const SampleSplit& split);

  const Series& in_sample() override { return in_; }
  const Series& out_sample() override { return out_; }
  const Series& live_sample() override { return live_; }

 private:
  explicit SplitSamples(std::tuple<Series, Series, Series> parts);

  Series in_, out_, live_;
};

enum class ProtocolStage { idle, optimize, validate, live };
std::string_view to_string(ProtocolStage s);

// Logs every access as "<stage>:<sample>" and refuses out/live reads while
// optimizing and live reads outside the live stage (ProtocolViolation).
class GuardedSamples final : public SampleAccess {
 public:
  explicit GuardedSamples(SampleAccess& inner) : inner_(inner) {}

  void enter(ProtocolStage stage) { stage_ = stage; }
  ProtocolStage stage() const { return stage_; }
  const std::vector<std::string>& log() const { return log_; }

  const Series& in_sample() override;
  const Series& out_sample() override;
  const Series& live_sample() override;

 private:
  void record(std::string_view sample, bool allowed);

  SampleAccess& inner_;
  ProtocolStage stage_ = ProtocolStage::idle;
  std::vector<std::string> log_;
};

enum class GateDecision { accepted, rejected_out_sample, rejected_randomization };
std::string_view to_string(GateDecision d);

struct GateThresholds {
  double min_out_sharpe = 0.5;
  double max_randomized_degradation = 0.5;  // (in - randomized) / in
};

struct ValidationReport {
  StrategyParams best_params;
  std::optional<double> in_sharpe;
  std::optional<double> randomized_in_sharpe;
  std::optional<double> randomized_degradation;
  std::optional<double> out_sharpe;   // absent when randomization already rejected
  std::optional<double> live_sharpe;  // present only after acceptance and live evaluation
  GateDecision gate_decision = GateDecision::rejected_out_sample;
  bool live_evaluated = false;
};

// Gate: the in-sample Sharpe must be defined and positive and lose at most
// max_randomized_degradation of itself on the randomized in-sample; then the
// out-sample Sharpe must reach min_out_sharpe. The live sample is read once,
// only after acceptance.
class ValidationSession {
 public:
  ValidationSession(SampleAccess& data, StrategyParams params, GateThresholds thresholds,
                    std::uint64_t seed, BacktestOptions options = {});

  GateDecision run_gate();
  std::optional<double> evaluate_live();
  const ValidationReport& report() const { return report_; }

 private:
  std::optional<double> sharpe_on(const Series& s) const;

  SampleAccess& data_;
  GateThresholds thresholds_;
  std::uint64_t seed_;
  BacktestOptions options_;
  ValidationReport report_;
  bool gate_done_ = false;
};

// Runs the gate and, on acceptance, the live evaluation.
ValidationReport validate(const StrategyParams& params, SampleAccess& data, const GateThresholds& thresholds,
                          std::uint64_t seed, const BacktestOptions& options = {});

struct ProtocolResult {
  OptimizeResult search;
  ValidationReport report;
  std::vector<std::string> access_log;
};

// optimize on the in-sample, then validate; every sample access is guarded.
ProtocolResult run_protocol(SampleAccess& data, const SearchSpace& space, std::size_t budget,
                            std::uint64_t seed, const GateThresholds& thresholds,
                            const OptimizeOptions& options = {});

}  // namespace trendlab
