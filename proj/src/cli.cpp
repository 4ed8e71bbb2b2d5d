#include "trendlab/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "trendlab/config.hpp"
#include "trendlab/digest.hpp"
#include "trendlab/error.hpp"
#include "trendlab/indicators.hpp"
#include "trendlab/qstats.hpp"
#include "trendlab/robustness.hpp"
#include "trendlab/synthdata.hpp"

namespace trendlab::cli {

using nlohmann::ordered_json;

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct Options {
  std::string data;
  std::string config;
  std::string split;
  std::string space;
  std::string out;
  std::string sample;  // default: "in" with a split, else "all"
  std::string lags = "1,2,4,8,16";
  std::uint64_t seed = 0;
  std::size_t budget = 200;
  std::size_t tau0 = 0;
  std::int64_t factor = 2;
  std::int64_t bar_seconds = 0;
  unsigned threads = 0;
  bool randomize = false;
  std::optional<double> q;

  // synth
  std::string kind = "gaussian_walk";
  std::size_t bars = 1000;
  double sigma = 1e-3, drift = 0.0, q_gen = 1.5, beta = 1e6, hurst = 0.5;
  std::int64_t price = 1'000'000;
  std::int64_t start = 946684800;
};

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<std::filesystem::path> output_dir(const Options& o) {
  if (!o.out.empty()) return std::filesystem::path(o.out);
  if (const char* env = std::getenv("TRENDLAB_OUT"); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
  if (!f.flush()) throw Error("write failed for " + path.string());
}

void emit(const ordered_json& j, const Options& o, std::string_view file, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (auto dir = output_dir(o)) write_file(*dir / file, text);
}

RunConfig load_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.bar_seconds > 0) c.bar_seconds = o.bar_seconds;
  if (!o.split.empty()) c.split = parse_split(read_text_file(o.split));
  if (!o.space.empty()) c.search_space = parse_search_space(read_text_file(o.space));
  return c;
}

Series load_data(const Options& o, const RunConfig& c) {
  if (o.data.empty()) throw UsageError("--data is required");
  return load_csv(o.data, c.instrument, c.bar_seconds);
}

std::string run_digest(std::string_view command, const Options& o, const RunConfig& c, const Series* s,
                       std::string_view extra = {}) {
  Digest d;
  d.update(command).update(c.canonical_json()).update(static_cast<std::int64_t>(o.seed)).update(extra);
  if (s) d.update(s->id());
  return d.hex();
}

// Sub-series selected by --sample; "all" is the whole series.
Series select_sample(const Series& s, const RunConfig& c, std::string sample) {
  if (sample.empty()) sample = c.split ? "in" : "all";
  if (sample == "all") return s;
  if (!c.split) throw UsageError("--sample " + sample + " needs a split (--split or config.split)");
  auto [in, out, live] = split(s, *c.split);
  if (sample == "in") return in;
  if (sample == "out") return out;
  return live;
}

ordered_json params_json(const StrategyParams& p) {
  return {{"tau1", p.tau1},
          {"tau2", p.tau2},
          {"tau3", p.tau3},
          {"tau4", p.tau4},
          {"vol_lo", p.vol_lo},
          {"vol_hi", std::isinf(p.vol_hi) ? ordered_json("inf") : ordered_json(p.vol_hi)},
          {"profit_exit_bp", p.profit_exit_bp},
          {"loss_exit_bp", p.loss_exit_bp}};
}

std::string quotes_with_digest(const Series& s, const std::string& digest) {
  return "# config_digest: " + digest + "\n" + to_csv(s);
}

int cmd_ingest(const Options& o, std::ostream& out) {
  const RunConfig c = load_config(o);
  const Series s = load_data(o, c);
  const std::string digest = run_digest("ingest", o, c, &s);
  ordered_json j{{"config_digest", digest},
                 {"series_id", s.id()},
                 {"instrument", s.instrument().name},
                 {"bar_seconds", s.bar_seconds()},
                 {"n_quotes", s.size()},
                 {"first_timestamp", s[0].timestamp},
                 {"last_timestamp", s[s.size() - 1].timestamp}};
  out << j.dump(2) << "\n";
  if (auto dir = output_dir(o)) write_file(*dir / "quotes.csv", quotes_with_digest(s, digest));
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const RunConfig c = load_config(o);
  GeneratorSpec g;
  g.kind = parse_generator_kind(o.kind);
  g.n_bars = o.bars;
  g.seed = o.seed;
  g.sigma = o.sigma;
  g.drift = o.drift;
  g.q = o.q_gen;
  g.beta = o.beta;
  g.hurst = o.hurst;
  g.initial_price_ticks = o.price;
  g.start_time = o.start;
  g.bar_seconds = c.bar_seconds;
  const Series s = generate(g, c.instrument);
  std::ostringstream spec;
  spec << to_string(g.kind) << ";" << g.n_bars << ";" << g.sigma << ";" << g.drift << ";" << g.q << ";" << g.beta
       << ";" << g.hurst << ";" << g.initial_price_ticks << ";" << g.start_time;
  const std::string text = quotes_with_digest(s, run_digest("synth", o, c, nullptr, spec.str()));
  if (auto dir = output_dir(o))
    write_file(*dir / "quotes.csv", text);
  else
    out << text;
  return kExitOk;
}

int cmd_resample(const Options& o, std::ostream& out) {
  const RunConfig c = load_config(o);
  const Series s = resample(load_data(o, c), o.factor);
  const std::string text =
      quotes_with_digest(s, run_digest("resample", o, c, &s, std::to_string(o.factor)));
  if (auto dir = output_dir(o))
    write_file(*dir / "quotes.csv", text);
  else
    out << text;
  return kExitOk;
}

int cmd_backtest(const Options& o, std::ostream& out) {
  const RunConfig c = load_config(o);
  const Series s = select_sample(load_data(o, c), c, o.sample);
  const StrategyConfig strategy = c.strategy.value_or(StrategyParams{});
  const Ledger l = run_backtest(s, strategy, std::nullopt, o.seed, c.backtest);
  const Metrics m = compute_metrics(l, bars_per_year(s.bar_seconds()));
  export_report(l, m, output_dir(o).value_or("out"));
  out << metrics_json(l, m);
  return kExitOk;
}

ordered_json outcome_json(const StressOutcome& t) {
  ordered_json comps = ordered_json::array();
  for (const auto& c : t.components) comps.push_back(c.label());
  ordered_json j{{"id", t.id},
                 {"components", comps},
                 {"sharpe", opt(t.sharpe)},
                 {"total_net_bp", t.total_net_bp},
                 {"n_trades", t.n_trades}};
  if (!t.violations.empty()) j["violations"] = t.violations;
  if (t.error) j["error"] = *t.error;
  return j;
}

ordered_json run_json(const BatteryRun& r) {
  ordered_json tests = ordered_json::array();
  for (const auto& t : r.tests) tests.push_back(outcome_json(t));
  return {{"nominal", outcome_json(r.nominal)},
          {"tests", tests},
          {"spread",
           {{"mean", opt(r.spread.mean)},
            {"rms", opt(r.spread.rms)},
            {"min", opt(r.spread.min)},
            {"defined", r.spread.defined}}}};
}

int cmd_stress(const Options& o, std::ostream& out) {
  const RunConfig c = load_config(o);
  const Series s = select_sample(load_data(o, c), c, o.sample);
  BatteryOptions b;
  b.randomized = o.randomize;
  b.threads = o.threads;
  b.backtest = c.backtest;
  const auto report = run_battery(s, c.strategy.value_or(StrategyParams{}), o.seed, b);
  ordered_json j{{"config_digest", run_digest("stress", o, c, &s, o.randomize ? "randomized" : "")},
                 {"sharpe_convention", kSharpeConvention},
                 {"original", run_json(report.original)}};
  j["randomized"] = report.randomized ? run_json(*report.randomized) : ordered_json(nullptr);
  emit(j, o, "stress.json", out);
  return kExitOk;
}

std::vector<std::size_t> parse_lags(const std::string& text) {
  std::vector<std::size_t> lags;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      lags.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw UsageError("--lags: '" + item + "' is not a positive integer");
    }
  }
  if (lags.empty()) throw UsageError("--lags is empty");
  return lags;
}

int cmd_stats(const Options& o, std::ostream& out) {
  const RunConfig c = load_config(o);
  const Series s = select_sample(load_data(o, c), c, o.sample);
  const auto lags = parse_lags(o.lags);
  const auto returns = log_returns(s, 1);
  const QGaussianFit fit = qgauss_fit(returns);
  const double q = o.q.value_or(fit.model.q());
  const ScalingFit scaling = scaling_check(s, q, lags, o.tau0);

  ordered_json table = ordered_json::array();
  for (const auto& r : scaling.table)
    table.push_back({{"lag", r.lag}, {"beta", r.beta}, {"q", r.q}, {"xbar", r.xbar}, {"samples", r.samples}});
  ordered_json j{{"config_digest", run_digest("stats", o, c, &s, o.lags + ";" + std::to_string(o.tau0))},
                 {"series_id", s.id()},
                 {"n_returns", returns.size()},
                 {"qfit",
                  {{"q", fit.model.q()},
                   {"beta", fit.model.beta()},
                   {"xbar", fit.model.xbar()},
                   {"z_q", fit.model.z_q()},
                   {"log_likelihood", fit.log_likelihood},
                   {"iterations", fit.iterations}}},
                 {"scaling",
                  {{"q_used", scaling.q_used},
                   {"tau0", scaling.tau0},
                   {"exponent_fitted", scaling.exponent_fitted},
                   {"exponent_stderr", scaling.exponent_stderr},
                   {"exponent_predicted", scaling.exponent_predicted},
                   {"ratio_exponent_fitted", opt(scaling.ratio_exponent_fitted)},
                   {"beta_tau0", opt(scaling.beta_tau0)},
                   {"table", table}}}};
  if (returns.size() >= 512) {
    const auto h = hurst_rescaled_range(returns);
    j["hurst"] = {{"h", h.h}, {"std_error", h.std_error}, {"method", "rescaled_range"}};
  } else {
    j["hurst"] = nullptr;
  }
  emit(j, o, "stats.json", out);
  return kExitOk;
}

int cmd_optimize(const Options& o, std::ostream& out) {
  const RunConfig c = load_config(o);
  if (!c.split) throw UsageError("optimize needs a sample split (--split or config.split)");
  const Series s = load_data(o, c);
  SplitSamples samples(s, *c.split);
  OptimizeOptions opts;
  opts.threads = o.threads;
  opts.backtest = c.backtest;
  const SearchSpace space = c.search_space.value_or(SearchSpace::defaults());
  const ProtocolResult r = run_protocol(samples, space, o.budget, o.seed, c.gate, opts);

  ordered_json trace = ordered_json::array();
  for (const auto& e : r.search.trace)
    trace.push_back({{"params", params_json(e.params)},
                     {"sharpe", opt(e.sharpe)},
                     {"total_net_bp", e.total_net_bp},
                     {"n_trades", e.n_trades}});
  const auto& v = r.report;
  ordered_json j{{"config_digest", run_digest("optimize", o, c, &s, std::to_string(o.budget))},
                 {"sharpe_convention", kSharpeConvention},
                 {"best_params", params_json(v.best_params)},
                 {"in_sharpe", opt(v.in_sharpe)},
                 {"randomized_in_sharpe", opt(v.randomized_in_sharpe)},
                 {"randomized_degradation", opt(v.randomized_degradation)},
                 {"out_sharpe", opt(v.out_sharpe)},
                 {"live_sharpe", opt(v.live_sharpe)},
                 {"gate_decision", to_string(v.gate_decision)},
                 {"thresholds",
                  {{"min_out_sharpe", c.gate.min_out_sharpe},
                   {"max_randomized_degradation", c.gate.max_randomized_degradation}}},
                 {"access_log", r.access_log},
                 {"budget", o.budget},
                 {"trace", trace}};
  emit(j, o, "optimize.json", out);
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trend-following backtester and robustness toolkit", "trendlab"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool data_required) {
    auto* d = sub->add_option("--data", o.data, "Quote CSV (timestamp,close)");
    if (data_required) d->required();
    sub->add_option("--config", o.config, "JSON run configuration");
    sub->add_option("--seed", o.seed, "Root seed");
    sub->add_option("--out", o.out, "Output directory (default $TRENDLAB_OUT)");
    sub->add_option("--bar-seconds", o.bar_seconds, "Bar size override");
  };
  auto with_split = [&](CLI::App* sub) {
    sub->add_option("--split", o.split, "Sample split JSON");
    sub->add_option("--sample", o.sample, "in | out | live | all (default: in with a split)")->check(CLI::IsMember({"in", "out", "live", "all"}));
  };

  auto* ingest = app.add_subcommand("ingest", "Validate and normalize a quote CSV");
  common(ingest, true);
  auto* synth = app.add_subcommand("synth", "Write a synthetic quote CSV");
  common(synth, false);
  synth->add_option("--kind", o.kind, "gaussian_walk | qgaussian_walk | fbm_like | trending");
  synth->add_option("--bars", o.bars, "Number of bars");
  synth->add_option("--sigma", o.sigma, "Per-bar log-return scale");
  synth->add_option("--drift", o.drift, "Per-bar log drift");
  synth->add_option("--q", o.q_gen, "q of the q-Gaussian walk");
  synth->add_option("--beta", o.beta, "beta of the q-Gaussian walk");
  synth->add_option("--hurst", o.hurst, "Hurst exponent of fbm_like");
  synth->add_option("--price", o.price, "Initial price in ticks");
  synth->add_option("--start", o.start, "First timestamp (epoch seconds)");
  auto* backtest = app.add_subcommand("backtest", "Run one backtest and export the report");
  common(backtest, true);
  with_split(backtest);
  auto* optimize_cmd = app.add_subcommand("optimize", "Optimize on the in-sample and run the validation gate");
  common(optimize_cmd, true);
  optimize_cmd->add_option("--split", o.split, "Sample split JSON");
  optimize_cmd->add_option("--space", o.space, "Search space JSON");
  optimize_cmd->add_option("--budget", o.budget, "Maximum candidate evaluations")->check(CLI::PositiveNumber);
  optimize_cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  auto* stress = app.add_subcommand("stress", "Run the 128-test stress battery");
  common(stress, true);
  with_split(stress);
  stress->add_flag("--randomize", o.randomize, "Also run the battery on the randomized series");
  stress->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  auto* stats = app.add_subcommand("stats", "q-Gaussian fit, scaling law and Hurst estimate");
  common(stats, true);
  with_split(stats);
  stats->add_option("--lags", o.lags, "Comma-separated return lags");
  stats->add_option("--tau0", o.tau0, "Reference lag (0 = none)");
  stats->add_option("--q", o.q, "q for the scaling law (default: fitted)");
  auto* resample_cmd = app.add_subcommand("resample", "Keep every k-th close");
  common(resample_cmd, true);
  resample_cmd->add_option("--factor", o.factor, "Resampling factor")->check(CLI::PositiveNumber);

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(o, out);
    if (synth->parsed()) return cmd_synth(o, out);
    if (backtest->parsed()) return cmd_backtest(o, out);
    if (optimize_cmd->parsed()) return cmd_optimize(o, out);
    if (stress->parsed()) return cmd_stress(o, out);
    if (stats->parsed()) return cmd_stats(o, out);
    if (resample_cmd->parsed()) return cmd_resample(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace trendlab::cli
