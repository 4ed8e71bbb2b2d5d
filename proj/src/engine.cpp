#include "trendlab/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "trendlab/digest.hpp"
#include "trendlab/error.hpp"
#include "trendlab/indicators.hpp"
#include "trendlab/numeric.hpp"
#include "trendlab/rng.hpp"

namespace trendlab {

namespace {

constexpr std::array<std::pair<ExitReason, std::string_view>, 6> kExitReasons{{
    {ExitReason::crossing, "crossing"},
    {ExitReason::vol_gate, "vol_gate"},
    {ExitReason::profit_extreme, "profit_extreme"},
    {ExitReason::loss_extreme, "loss_extreme"},
    {ExitReason::forced_exit, "forced_exit"},
    {ExitReason::end_of_data, "end_of_data"},
}};

ExitReason exit_reason_of(Reason r) {
  switch (r) {
    case Reason::crossing: return ExitReason::crossing;
    case Reason::vol_gate: return ExitReason::vol_gate;
    case Reason::profit_extreme: return ExitReason::profit_extreme;
    case Reason::loss_extreme: return ExitReason::loss_extreme;
  }
  return ExitReason::crossing;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

}  // namespace

std::string_view to_string(ExitReason r) {
  for (const auto& [k, v] : kExitReasons)
    if (k == r) return v;
  return "?";
}

ExitReason parse_exit_reason(std::string_view text) {
  for (const auto& [k, v] : kExitReasons)
    if (v == text) return k;
  throw DataError("unknown exit reason '" + std::string(text) + "'");
}

Trade settle_trade(Position direction, std::int64_t entry_price, std::int64_t exit_price,
                   std::int64_t round_trip_fee_bp) {
  const int dir = sign_of(direction);
  if (dir == 0) throw InvalidArgument("a trade needs a long or short direction");
  Trade t;
  t.direction = direction;
  t.entry_price = entry_price;
  t.exit_price = exit_price;
  t.gross_bp = dir * (exit_price - entry_price);
  t.net_bp = t.gross_bp - round_trip_fee_bp;
  return t;
}

bool Perturbation::empty() const {
  return !forced_exit_bars && skip_probabilities.empty() && delay_bars == 0 &&
         adverse_slippage_multiple == 0 && !fee_multiplier;
}

void Perturbation::validate() const {
  if (forced_exit_bars && *forced_exit_bars < 1)
    throw InvalidArgument("forced exit horizon must be at least one bar");
  for (double p : skip_probabilities)
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("skip probability must lie in [0, 1]");
  if (delay_bars < 0) throw InvalidArgument("fill delay must be non-negative");
  if (adverse_slippage_multiple < 0) throw InvalidArgument("adverse offset must be non-negative");
  if (fee_multiplier && *fee_multiplier < 0) throw InvalidArgument("fee multiplier must be non-negative");
}

std::string Perturbation::canonical_string() const {
  std::ostringstream os;
  os << "forced=" << (forced_exit_bars ? std::to_string(*forced_exit_bars) : "-") << ";skip=";
  char buf[40];
  for (double p : skip_probabilities) {
    std::snprintf(buf, sizeof buf, "%.17g,", p);
    os << buf;
  }
  os << ";delay=" << delay_bars << ";adverse=" << adverse_slippage_multiple
     << ";fee=" << (fee_multiplier ? std::to_string(*fee_multiplier) : "-");
  return os.str();
}

std::size_t warmup_bars(const StrategyConfig& config, const BacktestOptions& options) {
  if (const auto* b = std::get_if<BaselineParams>(&config))
    return static_cast<std::size_t>(std::ceil(b->tau_bars));
  const auto& p = std::get<StrategyParams>(config);
  return std::max(options.vol_window_bars, static_cast<std::size_t>(std::ceil(p.max_tau())));
}

std::string config_digest(const Series& s, const StrategyConfig& strategy,
                          const std::optional<Perturbation>& perturbation, std::uint64_t seed,
                          const BacktestOptions& options) {
  Digest d;
  d.update("backtest").update(s.id()).update(canonical_string(strategy));
  d.update(static_cast<std::int64_t>(seed));
  d.update(perturbation && !perturbation->empty() ? perturbation->canonical_string() : "none");
  d.update(static_cast<std::int64_t>(options.vol_window_bars));
  d.update(static_cast<std::int64_t>(options.pnl_window_bars));
  return d.hex();
}

Ledger run_backtest(const Series& s, const StrategyConfig& strategy,
                    const std::optional<Perturbation>& perturbation, std::uint64_t seed,
                    const BacktestOptions& options) {
  std::visit([](const auto& p) { p.validate(); }, strategy);
  if (options.vol_window_bars < 2) throw InvalidArgument("volatility window must be at least 2 bars");
  const Perturbation pert = perturbation.value_or(Perturbation{});
  pert.validate();

  const std::size_t n = s.size();
  const std::size_t warm = warmup_bars(strategy, options);
  if (warm >= n)
    throw InvalidArgument("warm-up of " + std::to_string(warm) + " bars is not shorter than the series (" +
                          std::to_string(n) + " bars)");

  const InstrumentSpec& inst = s.instrument();
  const std::int64_t multiplier = std::max(inst.fee_multiplier, pert.fee_multiplier.value_or(0));
  const std::int64_t fee = multiplier * inst.slippage_bp;
  const std::int64_t adverse = pert.adverse_slippage_multiple * inst.slippage_bp;

  const auto* gated = std::get_if<StrategyParams>(&strategy);
  const auto* baseline = std::get_if<BaselineParams>(&strategy);
  RollingVolatility vol;
  if (gated) vol = rolling_volatility(s, options.vol_window_bars);
  // The strategy models the instrument's nominal fee; a stressed fee only
  // changes what execution charges.
  SignalState state = gated ? SignalState::for_gated(*gated, inst.round_trip_fee_bp(), options.pnl_window_bars)
                            : SignalState::for_baseline(*baseline);
  Rng skip_rng(derive_seed(seed, "skip-trade"));

  Ledger ledger;
  ledger.config_digest = config_digest(s, strategy, perturbation, seed, options);
  ledger.round_trip_fee_bp = fee;
  ledger.bar_seconds = s.bar_seconds();
  ledger.equity.reserve(n);

  struct Open {
    std::size_t bar;
    int dir;
    std::int64_t price;
  };
  struct Pending {
    std::size_t due;
    int target;
    ExitReason reason;
  };
  std::optional<Open> open;
  std::deque<Pending> pending;
  std::int64_t realized = 0;

  auto close_at = [&](std::size_t k, ExitReason reason) {
    Trade t = settle_trade(position_from_sign(open->dir), open->price, s[k].close - open->dir * adverse, fee);
    t.entry_time = s[open->bar].timestamp;
    t.exit_time = s[k].timestamp;
    t.duration_bars = static_cast<std::int64_t>(k - open->bar);
    t.exit_reason = reason;
    realized += t.net_bp;
    ledger.trades.push_back(t);
    open.reset();
  };
  auto execute = [&](std::size_t k, int target, ExitReason reason) {
    const int current = open ? open->dir : 0;
    if (current == target) return;
    if (open) close_at(k, reason);
    if (target == 0) return;
    bool skipped = false;
    for (double p : pert.skip_probabilities) skipped = (skip_rng.uniform01() < p) || skipped;
    if (!skipped) open = Open{k, target, s[k].close + target * adverse};
  };

  state.last_price = s[0].close;
  for (std::size_t k = 0; k < n; ++k) {
    const std::int64_t price = s[k].close;
    std::optional<OrderIntent> intent;
    if (k > 0) {
      Bar bar{std::log(static_cast<double>(price) / static_cast<double>(s[k - 1].close)),
              gated ? vol.values[k] : 0.0, price};
      if (k < warm) {
        state = warm_up_step(state, bar);
      } else {
        auto [next, order] = gated ? gated_signal(state, *gated, bar) : baseline_signal(state, *baseline, bar);
        state = std::move(next);
        if (order.action != Action::none) intent = order;
      }
    }
    while (!pending.empty() && pending.front().due == k) {
      execute(k, pending.front().target, pending.front().reason);
      pending.pop_front();
    }
    if (intent) {
      const int target = sign_of(state.position);
      const ExitReason reason = exit_reason_of(*intent->reason);
      if (pert.delay_bars == 0)
        execute(k, target, reason);
      else
        pending.push_back({k + static_cast<std::size_t>(pert.delay_bars), target, reason});
    }
    if (open && pert.forced_exit_bars &&
        static_cast<std::int64_t>(k - open->bar) >= *pert.forced_exit_bars)
      close_at(k, ExitReason::forced_exit);
    state.sync(open ? position_from_sign(open->dir) : Position::flat,
               open ? std::optional<std::int64_t>(open->price) : std::nullopt);

    std::int64_t mark = open ? open->dir * (price - open->price) - fee : 0;
    ledger.equity.push_back({s[k].timestamp, realized + mark});
  }
  if (open) {
    close_at(n - 1, ExitReason::end_of_data);
    ledger.equity.back().cum_net_bp = realized;
  }
  return ledger;
}

std::vector<std::string> ledger_violations(const Ledger& l) {
  std::vector<std::string> out;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < l.trades.size(); ++i) {
    const Trade& t = l.trades[i];
    const std::string tag = "trade " + std::to_string(i) + ": ";
    const int dir = sign_of(t.direction);
    if (dir == 0) out.push_back(tag + "flat direction");
    if (t.exit_time < t.entry_time) out.push_back(tag + "exit before entry");
    if (t.duration_bars < 0) out.push_back(tag + "negative duration");
    if (t.gross_bp != dir * (t.exit_price - t.entry_price)) out.push_back(tag + "gross mismatch");
    if (t.net_bp != t.gross_bp - l.round_trip_fee_bp) out.push_back(tag + "net mismatch");
    if (i > 0 && t.entry_time < l.trades[i - 1].exit_time) out.push_back(tag + "overlaps previous trade");
    total += t.net_bp;
  }
  for (std::size_t i = 1; i < l.equity.size(); ++i)
    if (l.equity[i].timestamp <= l.equity[i - 1].timestamp) {
      out.push_back("equity timestamps not increasing at point " + std::to_string(i));
      break;
    }
  if (!l.equity.empty() && l.equity.back().cum_net_bp != total)
    out.push_back("final equity " + std::to_string(l.equity.back().cum_net_bp) + " != sum of net " +
                  std::to_string(total));
  if (l.equity.empty() && !l.trades.empty()) out.push_back("trades without equity curve");
  return out;
}

Metrics compute_metrics(const Ledger& l, double bars_per_year) {
  Metrics m;
  m.n_trades = static_cast<std::int64_t>(l.trades.size());
  std::vector<double> nets;
  double duration_sum = 0.0;
  for (const auto& t : l.trades) {
    m.total_net_bp += t.net_bp;
    nets.push_back(static_cast<double>(t.net_bp));
    duration_sum += static_cast<double>(t.duration_bars);
    ++m.return_histogram[t.net_bp];
    ++m.duration_histogram[t.duration_bars];
  }
  if (!nets.empty()) {
    m.mean_trade_bp = mean(nets);
    m.rms_trade_bp = population_stddev(nets);
    m.mean_duration_bars = duration_sum / static_cast<double>(nets.size());
  }
  if (!l.equity.empty() && bars_per_year > 0.0)
    m.net_bp_per_year = static_cast<double>(m.total_net_bp) * bars_per_year / static_cast<double>(l.equity.size());

  std::map<std::int64_t, std::int64_t> daily;
  for (const auto& e : l.equity) daily.emplace(floor_div(e.timestamp, 86400), 0);
  for (const auto& t : l.trades) daily[floor_div(t.exit_time, 86400)] += t.net_bp;
  m.n_days = static_cast<std::int64_t>(daily.size());
  if (daily.size() >= 2) {
    std::vector<double> values;
    for (const auto& [day, v] : daily) values.push_back(static_cast<double>(v));
    const double sd = sample_stddev(values);
    if (sd > 0.0 && std::isfinite(sd)) m.sharpe = mean(values) / sd * std::sqrt(252.0);
  }
  return m;
}

double bars_per_year(std::int64_t bar_seconds) {
  if (bar_seconds <= 0) throw InvalidArgument("bar_seconds must be > 0");
  return 252.0 * 86400.0 / static_cast<double>(bar_seconds);
}

namespace {

std::string digest_line(const Ledger& l) { return "# config_digest: " + l.config_digest + "\n"; }

}  // namespace

std::string equity_csv(const Ledger& l) {
  std::string out = digest_line(l) + "timestamp,cum_net_bp\n";
  for (const auto& e : l.equity) out += std::to_string(e.timestamp) + "," + std::to_string(e.cum_net_bp) + "\n";
  return out;
}

std::string trades_csv(const Ledger& l) {
  std::string out = digest_line(l) +
                    "entry_time,exit_time,direction,entry_price,exit_price,gross_bp,net_bp,duration_bars,"
                    "exit_reason\n";
  for (const auto& t : l.trades) {
    out += std::to_string(t.entry_time) + "," + std::to_string(t.exit_time) + "," +
           std::string(to_string(t.direction)) + "," + std::to_string(t.entry_price) + "," +
           std::to_string(t.exit_price) + "," + std::to_string(t.gross_bp) + "," + std::to_string(t.net_bp) +
           "," + std::to_string(t.duration_bars) + "," + std::string(to_string(t.exit_reason)) + "\n";
  }
  return out;
}

std::string metrics_json(const Ledger& l, const Metrics& m) {
  nlohmann::ordered_json j;
  j["config_digest"] = l.config_digest;
  j["sharpe"] = m.sharpe ? nlohmann::ordered_json(*m.sharpe) : nlohmann::ordered_json(nullptr);
  j["sharpe_convention"] = kSharpeConvention;
  j["total_net_bp"] = m.total_net_bp;
  j["n_trades"] = m.n_trades;
  j["mean_trade_bp"] = m.mean_trade_bp;
  j["rms_trade_bp"] = m.rms_trade_bp;
  j["mean_duration_bars"] = m.mean_duration_bars;
  j["net_bp_per_year"] = m.net_bp_per_year;
  j["n_days"] = m.n_days;
  j["round_trip_fee_bp"] = l.round_trip_fee_bp;
  auto hist = [](const std::map<std::int64_t, std::int64_t>& h) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& [bin, count] : h) a.push_back({bin, count});
    return a;
  };
  j["return_histogram_bp"] = hist(m.return_histogram);
  j["duration_histogram_bars"] = hist(m.duration_histogram);
  return j.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
  if (!f.flush()) throw Error("write failed for " + path.string());
}

}  // namespace

void export_report(const Ledger& l, const Metrics& m, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
  write_file(dir / "equity.csv", equity_csv(l));
  write_file(dir / "trades.csv", trades_csv(l));
  write_file(dir / "metrics.json", metrics_json(l, m));
}

namespace {

std::int64_t parse_int(std::string_view field, std::size_t line) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size())
    throw DataError("bad integer '" + std::string(field) + "'", line);
  return v;
}

}  // namespace

std::vector<Trade> parse_trades_csv(std::string_view text) {
  std::vector<Trade> out;
  std::size_t pos = 0, line_no = 0;
  bool header = false;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line.substr(0, 20) != "entry_time,exit_time") throw DataError("missing trades header", line_no);
      header = true;
      continue;
    }
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
      auto c = line.find(',', start);
      f.push_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
      if (c == std::string_view::npos) break;
      start = c + 1;
    }
    if (f.size() != 9) throw DataError("expected 9 fields", line_no);
    Trade t;
    t.entry_time = parse_int(f[0], line_no);
    t.exit_time = parse_int(f[1], line_no);
    if (f[2] == "long")
      t.direction = Position::long_side;
    else if (f[2] == "short")
      t.direction = Position::short_side;
    else
      throw DataError("bad direction '" + std::string(f[2]) + "'", line_no);
    t.entry_price = parse_int(f[3], line_no);
    t.exit_price = parse_int(f[4], line_no);
    t.gross_bp = parse_int(f[5], line_no);
    t.net_bp = parse_int(f[6], line_no);
    t.duration_bars = parse_int(f[7], line_no);
    t.exit_reason = parse_exit_reason(f[8]);
    out.push_back(t);
  }
  if (!header) throw DataError("missing trades header");
  return out;
}

std::vector<Trade> read_trades_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_trades_csv(ss.str());
}

}  // namespace trendlab
