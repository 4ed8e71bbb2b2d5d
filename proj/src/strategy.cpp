#include "trendlab/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "trendlab/error.hpp"

namespace trendlab {

std::string_view to_string(Position p) {
  switch (p) {
    case Position::flat: return "flat";
    case Position::long_side: return "long";
    case Position::short_side: return "short";
  }
  return "?";
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::none: return "none";
    case Action::enter_long: return "enter_long";
    case Action::enter_short: return "enter_short";
    case Action::exit: return "exit";
    case Action::reverse: return "reverse";
  }
  return "?";
}

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::crossing: return "crossing";
    case Reason::vol_gate: return "vol_gate";
    case Reason::profit_extreme: return "profit_extreme";
    case Reason::loss_extreme: return "loss_extreme";
  }
  return "?";
}

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void BaselineParams::validate() const {
  if (!positive_finite(tau_bars)) throw InvalidArgument("baseline: tau_bars must be positive");
  if (!positive_finite(phi)) throw InvalidArgument("baseline: phi must be positive");
  if (break_threshold && !(*break_threshold > 0.0 && *break_threshold < phi))
    throw InvalidArgument("baseline: break_threshold must lie in (0, phi)");
}

void StrategyParams::validate() const {
  for (double t : {tau1, tau2, tau3, tau4})
    if (!positive_finite(t)) throw InvalidArgument("strategy: tau values must be positive");
  if (!(tau1 < tau2)) throw InvalidArgument("strategy: tau1 must be below tau2");
  if (!(tau3 < tau4)) throw InvalidArgument("strategy: tau3 must be below tau4");
  // vol_lo = 0 and vol_hi = inf are admitted so the gate can be opened fully.
  if (!(vol_lo >= 0.0) || std::isnan(vol_hi) || !(vol_lo < vol_hi))
    throw InvalidArgument("strategy: need 0 <= vol_lo < vol_hi");
  if (!(loss_exit_bp < 0 && profit_exit_bp > 0))
    throw InvalidArgument("strategy: need loss_exit_bp < 0 < profit_exit_bp");
}

double StrategyParams::max_tau() const { return std::max({tau1, tau2, tau3, tau4}); }

std::string canonical_string(const StrategyConfig& config) {
  if (const auto* b = std::get_if<BaselineParams>(&config)) {
    std::string s = "baseline;tau=" + num(b->tau_bars) + ";phi=" + num(b->phi);
    if (b->break_threshold) s += ";break=" + num(*b->break_threshold);
    return s;
  }
  const auto& p = std::get<StrategyParams>(config);
  return "gated;tau=" + num(p.tau1) + "," + num(p.tau2) + "," + num(p.tau3) + "," + num(p.tau4) +
         ";vol=" + num(p.vol_lo) + "," + num(p.vol_hi) + ";exit=" + std::to_string(p.profit_exit_bp) +
         "," + std::to_string(p.loss_exit_bp);
}

PnlWindow::PnlWindow(std::size_t capacity) : values_(capacity, 0) {
  if (capacity == 0) throw InvalidArgument("P&L window must hold at least one bar");
}

void PnlWindow::push(std::int64_t pnl_bp) {
  if (count_ == values_.size()) {
    sum_ -= values_[head_];
  } else {
    ++count_;
  }
  values_[head_] = pnl_bp;
  sum_ += pnl_bp;
  head_ = (head_ + 1) % values_.size();
}

void PnlWindow::clear() {
  std::fill(values_.begin(), values_.end(), 0);
  head_ = 0;
  count_ = 0;
  sum_ = 0;
}

SignalState SignalState::for_baseline(const BaselineParams& p) {
  p.validate();
  EmaState e(p.tau_bars);
  return SignalState{{e, e, e, e}, 0.0, Position::flat, std::nullopt, PnlWindow(1),
                     std::nullopt, {0, 0}, 0};
}

SignalState SignalState::for_gated(const StrategyParams& p, std::int64_t round_trip_fee_bp,
                                   std::size_t pnl_window_bars) {
  p.validate();
  if (round_trip_fee_bp < 0) throw InvalidArgument("round-trip fee must be non-negative");
  return SignalState{{EmaState(p.tau1), EmaState(p.tau2), EmaState(p.tau3), EmaState(p.tau4)},
                     0.0,
                     Position::flat,
                     std::nullopt,
                     PnlWindow(pnl_window_bars),
                     std::nullopt,
                     {0, 0},
                     round_trip_fee_bp};
}

void SignalState::sync(Position actual, std::optional<std::int64_t> actual_entry) {
  if ((actual == Position::flat) != !actual_entry.has_value())
    throw InvalidArgument("entry price must be present iff a position is open");
  if (actual != position) {
    trailing_pnl.clear();
    if (actual != Position::flat) trailing_pnl.push(-round_trip_fee_bp);
  }
  position = actual;
  entry_price = actual_entry;
}

namespace {

int sign(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

// Steps all EMAs, marks the open position and updates the crossing
// trackers. Returns which pairs produced a crossing on this bar.
std::array<bool, 2> observe(SignalState& s, const Bar& bar) {
  for (auto& e : s.emas) e = ema_step(e, bar.ret);
  std::array<bool, 2> crossed{false, false};
  for (int pair = 0; pair < 2; ++pair) {
    int now = sign(s.emas[2 * pair + 1].value() - s.emas[2 * pair].value());
    if (now == 0) continue;
    crossed[pair] = s.pair_sign[pair] != 0 && now != s.pair_sign[pair];
    s.pair_sign[pair] = now;
  }
  if (s.position != Position::flat && s.last_price)
    s.trailing_pnl.push(sign_of(s.position) * (bar.price - *s.last_price));
  s.last_price = bar.price;
  s.volatility_bp = bar.vol_bp;
  return crossed;
}

void open(SignalState& s, int dir, std::int64_t price) {
  s.position = position_from_sign(dir);
  s.entry_price = price;
  s.trailing_pnl.clear();
  s.trailing_pnl.push(-s.round_trip_fee_bp);
}

void close(SignalState& s) {
  s.position = Position::flat;
  s.entry_price.reset();
  s.trailing_pnl.clear();
}

// Moves toward direction `dir`; none if already there.
OrderIntent go(SignalState& s, int dir, Reason why, std::int64_t price) {
  int cur = sign_of(s.position);
  if (cur == dir) return {};
  Action a = cur == 0 ? (dir > 0 ? Action::enter_long : Action::enter_short) : Action::reverse;
  open(s, dir, price);
  return {a, why};
}

}  // namespace

std::pair<SignalState, OrderIntent> baseline_signal(const SignalState& state,
                                                    const BaselineParams& params, const Bar& bar) {
  SignalState s = state;
  s.emas[0] = ema_step(s.emas[0], bar.ret);
  s.last_price = bar.price;
  s.volatility_bp = bar.vol_bp;
  double phi = s.emas[0].value();
  OrderIntent intent;
  if (phi >= params.phi) {
    intent = go(s, 1, Reason::crossing, bar.price);
  } else if (phi <= -params.phi) {
    intent = go(s, -1, Reason::crossing, bar.price);
  } else if (params.break_threshold && s.position != Position::flat &&
             std::abs(phi) < *params.break_threshold) {
    close(s);
    intent = {Action::exit, Reason::crossing};
  }
  return {std::move(s), intent};
}

std::pair<SignalState, OrderIntent> gated_signal(const SignalState& state,
                                                 const StrategyParams& params, const Bar& bar) {
  SignalState s = state;
  auto crossed = observe(s, bar);

  if (s.position != Position::flat) {
    std::int64_t pnl = s.trailing_pnl.sum();
    if (pnl >= params.profit_exit_bp || pnl <= params.loss_exit_bp) {
      Reason why = pnl >= params.profit_exit_bp ? Reason::profit_extreme : Reason::loss_extreme;
      close(s);
      return {std::move(s), {Action::exit, why}};
    }
  }

  OrderIntent intent;
  if (bar.vol_bp < params.vol_lo) {
    // quiet regime: hold
  } else if (bar.vol_bp <= params.vol_hi) {
    if (crossed[0]) intent = go(s, s.pair_sign[0], Reason::crossing, bar.price);
  } else if (crossed[0] || crossed[1]) {
    if (s.pair_sign[0] != 0 && s.pair_sign[0] == s.pair_sign[1]) {
      intent = go(s, s.pair_sign[0], Reason::vol_gate, bar.price);
    } else if (crossed[0] && sign_of(s.position) == -s.pair_sign[0]) {
      close(s);
      intent = {Action::exit, Reason::crossing};
    }
  }
  return {std::move(s), intent};
}

SignalState warm_up_step(const SignalState& state, const Bar& bar) {
  SignalState s = state;
  observe(s, bar);
  return s;
}

}  // namespace trendlab
