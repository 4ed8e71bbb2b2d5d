#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "trendlab/indicators.hpp"

namespace trendlab {

enum class Position { flat, long_side, short_side };

constexpr int sign_of(Position p) {
  return p == Position::long_side ? 1 : (p == Position::short_side ? -1 : 0);
}
constexpr Position position_from_sign(int s) {
  return s > 0 ? Position::long_side : (s < 0 ? Position::short_side : Position::flat);
}
std::string_view to_string(Position p);

enum class Action { none, enter_long, enter_short, exit, reverse };
enum class Reason { crossing, vol_gate, profit_extreme, loss_extreme };

std::string_view to_string(Action a);
std::string_view to_string(Reason r);

struct OrderIntent {
  Action action = Action::none;
  std::optional<Reason> reason;  // absent iff action == none

  friend bool operator==(const OrderIntent&, const OrderIntent&) = default;
};

// Single-EMA threshold system: long when phi >= phi_threshold, short when
// phi <= -phi_threshold, optionally flat when |phi| drops below
// break_threshold while in a position.
struct BaselineParams {
  double tau_bars = 20.0;
  double phi = 0.01;
  std::optional<double> break_threshold;

  void validate() const;
  friend bool operator==(const BaselineParams&, const BaselineParams&) = default;
};

// The eight free parameters of the volatility-gated trend follower.
struct StrategyParams {
  static constexpr std::size_t kFreeParameters = 8;

  double tau1 = 10.0;  // fast memory, pair A
  double tau2 = 40.0;  // slow memory, pair A
  double tau3 = 20.0;  // fast memory, pair B
  double tau4 = 80.0;  // slow memory, pair B
  double vol_lo = 1.0;   // bp; below: no new entries
  double vol_hi = 50.0;  // bp; above: pairs A and B must agree
  std::int64_t profit_exit_bp = 200;
  std::int64_t loss_exit_bp = -100;

  void validate() const;
  double max_tau() const;
  friend bool operator==(const StrategyParams&, const StrategyParams&) = default;
};

using StrategyConfig = std::variant<BaselineParams, StrategyParams>;

// Stable text form used in config digests.
std::string canonical_string(const StrategyConfig& config);

// Rolling sum over the last `capacity` per-bar P&L values of the open trade.
class PnlWindow {
 public:
  explicit PnlWindow(std::size_t capacity = 288);

  void push(std::int64_t pnl_bp);
  void clear();
  std::int64_t sum() const { return sum_; }
  std::size_t size() const { return count_; }
  std::size_t capacity() const { return values_.size(); }

  friend bool operator==(const PnlWindow&, const PnlWindow&) = default;

 private:
  std::vector<std::int64_t> values_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  std::int64_t sum_ = 0;
};

// One bar as seen by a signal function.
struct Bar {
  double ret = 0.0;          // one-bar log return ending at this bar
  double vol_bp = 0.0;       // rolling volatility at this bar
  std::int64_t price = 0;    // close, ticks
};

// Evolving state of one backtest. The EMA pairs are (emas[0], emas[1]) and
// (emas[2], emas[3]); a pair's trend line is phi_slow - phi_fast, which is
// positive when the fast price average sits above the slow one.
struct SignalState {
  std::array<EmaState, 4> emas;
  double volatility_bp = 0.0;
  Position position = Position::flat;
  std::optional<std::int64_t> entry_price;  // present iff position != flat
  PnlWindow trailing_pnl;
  std::optional<std::int64_t> last_price;
  std::array<int, 2> pair_sign{0, 0};  // last nonzero sign of each trend line
  std::int64_t round_trip_fee_bp = 0;

  static SignalState for_baseline(const BaselineParams& p);
  static SignalState for_gated(const StrategyParams& p, std::int64_t round_trip_fee_bp,
                               std::size_t pnl_window_bars = 288);

  // Overrides the book with the actually executed position (used by the
  // engine when a fill differs from the intent). A changed position restarts
  // the trailing P&L window with the entry fee.
  void sync(Position actual, std::optional<std::int64_t> actual_entry);

  friend bool operator==(const SignalState&, const SignalState&) = default;
};

std::pair<SignalState, OrderIntent> baseline_signal(const SignalState& state,
                                                    const BaselineParams& params, const Bar& bar);

// Volatility regimes:
//   vol < vol_lo            no new entries; positions are held, P&L exits active
//   vol_lo <= vol <= vol_hi entries and reversals on pair A crossings
//   vol > vol_hi            a crossing of either pair acts only when both
//                           trend lines agree; an unconfirmed opposing
//                           pair A crossing exits to flat
// P&L exits: the open trade's net P&L over the trailing window reaching
// profit_exit_bp or loss_exit_bp closes it; re-entry needs a new crossing.
std::pair<SignalState, OrderIntent> gated_signal(const SignalState& state,
                                                 const StrategyParams& params, const Bar& bar);

// Advances EMAs, crossing trackers and the last price without trading
// (volatility warm-up bars).
SignalState warm_up_step(const SignalState& state, const Bar& bar);

}  // namespace trendlab
