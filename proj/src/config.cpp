#include "trendlab/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "trendlab/error.hpp"

namespace trendlab {

using nlohmann::json;

namespace {

void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw DataError(std::string(where) + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (auto key : keys) known = known || key == k;
    if (!known) throw DataError(std::string(where) + ": unknown key '" + k + "'");
  }
}

double number(const json& j, std::string_view where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  }
  throw DataError(std::string(where) + ": expected a number");
}

std::int64_t integer(const json& j, std::string_view where) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::floor(v) == v && std::abs(v) < 9e18) return static_cast<std::int64_t>(v);
  }
  throw DataError(std::string(where) + ": expected an integer");
}

InstrumentSpec parse_instrument(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "EC") return ec_instrument();
    if (name == "FDAX") return fdax_instrument();
    throw DataError("instrument: unknown preset '" + name + "'");
  }
  only_keys(j, "instrument", {"name", "tick_value", "slippage_bp", "fee_multiplier"});
  InstrumentSpec s;
  if (j.contains("name")) s.name = j["name"].get<std::string>();
  if (j.contains("tick_value")) {
    const auto& t = j["tick_value"];
    s.tick_value = Decimal::parse(t.is_string() ? t.get<std::string>() : t.dump());
  }
  if (j.contains("slippage_bp")) s.slippage_bp = integer(j["slippage_bp"], "instrument.slippage_bp");
  if (j.contains("fee_multiplier")) s.fee_multiplier = integer(j["fee_multiplier"], "instrument.fee_multiplier");
  s.validate();
  return s;
}

StrategyParams parse_strategy(const json& j) {
  only_keys(j, "strategy",
            {"tau1", "tau2", "tau3", "tau4", "vol_lo", "vol_hi", "profit_exit_bp", "loss_exit_bp"});
  StrategyParams p;
  if (j.contains("tau1")) p.tau1 = number(j["tau1"], "strategy.tau1");
  if (j.contains("tau2")) p.tau2 = number(j["tau2"], "strategy.tau2");
  if (j.contains("tau3")) p.tau3 = number(j["tau3"], "strategy.tau3");
  if (j.contains("tau4")) p.tau4 = number(j["tau4"], "strategy.tau4");
  if (j.contains("vol_lo")) p.vol_lo = number(j["vol_lo"], "strategy.vol_lo");
  if (j.contains("vol_hi")) p.vol_hi = number(j["vol_hi"], "strategy.vol_hi");
  if (j.contains("profit_exit_bp")) p.profit_exit_bp = integer(j["profit_exit_bp"], "strategy.profit_exit_bp");
  if (j.contains("loss_exit_bp")) p.loss_exit_bp = integer(j["loss_exit_bp"], "strategy.loss_exit_bp");
  p.validate();
  return p;
}

BaselineParams parse_baseline(const json& j) {
  only_keys(j, "baseline", {"tau_bars", "phi", "break_threshold"});
  BaselineParams b;
  if (j.contains("tau_bars")) b.tau_bars = number(j["tau_bars"], "baseline.tau_bars");
  if (j.contains("phi")) b.phi = number(j["phi"], "baseline.phi");
  if (j.contains("break_threshold") && !j["break_threshold"].is_null())
    b.break_threshold = number(j["break_threshold"], "baseline.break_threshold");
  b.validate();
  return b;
}

SampleSplit split_from(const json& j) {
  only_keys(j, "split", {"in", "out", "live"});
  auto range = [&](const char* key) {
    if (!j.contains(key)) throw DataError(std::string("split: missing '") + key + "'");
    const auto& r = j[key];
    if (!r.is_array() || r.size() != 2) throw DataError(std::string("split.") + key + ": expected [start, end]");
    return TimeRange{integer(r[0], "split"), integer(r[1], "split")};
  };
  SampleSplit sp{range("in"), range("out"), range("live")};
  sp.validate();
  return sp;
}

SearchSpace space_from(const json& j) {
  SearchSpace sp = SearchSpace::defaults();
  if (!j.is_object()) throw DataError("search_space: expected an object");
  for (const auto& [k, v] : j.items()) {
    std::size_t i = 0;
    while (i < 8 && SearchSpace::kNames[i] != k) ++i;
    if (i == 8) throw DataError("search_space: unknown parameter '" + k + "'");
    if (!v.is_array() || v.size() != 3) throw DataError("search_space." + k + ": expected [lo, hi, step]");
    sp.ranges[i] = {number(v[0], k), number(v[1], k), number(v[2], k)};
  }
  sp.validate();
  return sp;
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

json strategy_json(const StrategyConfig& c) {
  if (const auto* b = std::get_if<BaselineParams>(&c)) {
    json j{{"tau_bars", b->tau_bars}, {"phi", b->phi}};
    j["break_threshold"] = b->break_threshold ? json(*b->break_threshold) : json(nullptr);
    return json{{"baseline", j}};
  }
  const auto& p = std::get<StrategyParams>(c);
  return json{{"strategy",
               {{"tau1", p.tau1},
                {"tau2", p.tau2},
                {"tau3", p.tau3},
                {"tau4", p.tau4},
                {"vol_lo", p.vol_lo},
                {"vol_hi", std::isinf(p.vol_hi) ? json("inf") : json(p.vol_hi)},
                {"profit_exit_bp", p.profit_exit_bp},
                {"loss_exit_bp", p.loss_exit_bp}}}};
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
  const json j = parse_json(json_text, "config");
  only_keys(j, "config",
            {"instrument", "bar_seconds", "strategy", "baseline", "backtest", "search_space", "split", "gate"});
  RunConfig c;
  try {
    if (j.contains("instrument")) c.instrument = parse_instrument(j["instrument"]);
    if (j.contains("bar_seconds")) c.bar_seconds = integer(j["bar_seconds"], "bar_seconds");
    if (c.bar_seconds <= 0) throw DataError("bar_seconds must be > 0");
    if (j.contains("strategy") && j.contains("baseline"))
      throw DataError("config: give either 'strategy' or 'baseline', not both");
    if (j.contains("strategy")) c.strategy = parse_strategy(j["strategy"]);
    if (j.contains("baseline")) c.strategy = parse_baseline(j["baseline"]);
    if (j.contains("backtest")) {
      const auto& b = j["backtest"];
      only_keys(b, "backtest", {"vol_window_bars", "pnl_window_bars"});
      if (b.contains("vol_window_bars"))
        c.backtest.vol_window_bars = static_cast<std::size_t>(integer(b["vol_window_bars"], "backtest"));
      if (b.contains("pnl_window_bars"))
        c.backtest.pnl_window_bars = static_cast<std::size_t>(integer(b["pnl_window_bars"], "backtest"));
    }
    if (j.contains("search_space")) c.search_space = space_from(j["search_space"]);
    if (j.contains("split")) c.split = split_from(j["split"]);
    if (j.contains("gate")) {
      const auto& g = j["gate"];
      only_keys(g, "gate", {"min_out_sharpe", "max_randomized_degradation"});
      if (g.contains("min_out_sharpe")) c.gate.min_out_sharpe = number(g["min_out_sharpe"], "gate");
      if (g.contains("max_randomized_degradation"))
        c.gate.max_randomized_degradation = number(g["max_randomized_degradation"], "gate");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return c;
}

std::string RunConfig::canonical_json() const {
  json j;
  j["instrument"] = {{"name", instrument.name},
                     {"tick_value", instrument.tick_value.to_string()},
                     {"slippage_bp", instrument.slippage_bp},
                     {"fee_multiplier", instrument.fee_multiplier}};
  j["bar_seconds"] = bar_seconds;
  if (strategy) j.update(strategy_json(*strategy));
  j["backtest"] = {{"vol_window_bars", backtest.vol_window_bars}, {"pnl_window_bars", backtest.pnl_window_bars}};
  if (search_space) {
    json s;
    for (std::size_t i = 0; i < 8; ++i) {
      const auto& r = search_space->ranges[i];
      s[std::string(SearchSpace::kNames[i])] = {r.lo, r.hi, r.step};
    }
    j["search_space"] = s;
  }
  if (split)
    j["split"] = {{"in", {split->in_range.start, split->in_range.end}},
                  {"out", {split->out_range.start, split->out_range.end}},
                  {"live", {split->live_range.start, split->live_range.end}}};
  j["gate"] = {{"min_out_sharpe", gate.min_out_sharpe},
               {"max_randomized_degradation", gate.max_randomized_degradation}};
  return j.dump();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_text_file(path)); }

SampleSplit parse_split(std::string_view json_text) {
  const json j = parse_json(json_text, "split");
  try {
    return split_from(j.is_object() && j.contains("split") ? j["split"] : j);
  } catch (const json::exception& e) {
    throw DataError(std::string("split: ") + e.what());
  }
}

SearchSpace parse_search_space(std::string_view json_text) {
  const json j = parse_json(json_text, "search space");
  try {
    return space_from(j.is_object() && j.contains("search_space") ? j["search_space"] : j);
  } catch (const json::exception& e) {
    throw DataError(std::string("search space: ") + e.what());
  }
}

}  // namespace trendlab
