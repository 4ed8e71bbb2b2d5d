#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace trendlab {

// Exact decimal number units * 10^-scale. Prices and tick sizes are parsed
// into this form so tick conversion involves no binary rounding.
struct Decimal {
  std::int64_t units = 0;
  int scale = 0;

  static Decimal parse(std::string_view text);
  std::string to_string() const;
  double to_double() const;

  friend bool operator==(const Decimal&, const Decimal&) = default;
};

struct InstrumentSpec {
  std::string name = "default";
  Decimal tick_value{1, 4};   // price units per basis point
  std::int64_t slippage_bp = 1;  // per side
  std::int64_t fee_multiplier = 2;  // round-trip fee = multiplier * slippage

  void validate() const;
  std::int64_t round_trip_fee_bp() const { return fee_multiplier * slippage_bp; }

  friend bool operator==(const InstrumentSpec&, const InstrumentSpec&) = default;
};

// Euro/dollar future: 0.0001 per bp, slippage 1 bp, fee 2 x slippage.
InstrumentSpec ec_instrument();
// DAX future: 1 index point per bp, 1 bp round-trip fee.
InstrumentSpec fdax_instrument();

// Price -> integer ticks, rounding half away from zero.
std::int64_t price_to_ticks(const Decimal& price, const Decimal& tick_value);
// Ticks -> canonical price text with exactly tick_value.scale decimals.
std::string format_price(std::int64_t ticks, const Decimal& tick_value);

struct Quote {
  std::int64_t timestamp = 0;  // epoch seconds, UTC
  std::int64_t close = 0;      // ticks

  friend bool operator==(const Quote&, const Quote&) = default;
};

// Half-open [start, end) interval of epoch seconds.
struct TimeRange {
  std::int64_t start = 0;
  std::int64_t end = 0;

  bool contains(std::int64_t t) const { return t >= start && t < end; }
  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

struct SampleSplit {
  TimeRange in_range;
  TimeRange out_range;
  TimeRange live_range;

  // Throws InvalidArgument unless the ranges are non-empty, disjoint and
  // ordered in < out < live.
  void validate() const;
};

// Immutable close-price series on a fixed bar grid.
class Series {
 public:
  // Validates: bar_seconds > 0, closes > 0, timestamps strictly increasing,
  // every gap a multiple of bar_seconds.
  Series(InstrumentSpec instrument, std::vector<Quote> quotes, std::int64_t bar_seconds);

  const InstrumentSpec& instrument() const { return instrument_; }
  std::span<const Quote> quotes() const { return quotes_; }
  std::int64_t bar_seconds() const { return bar_seconds_; }
  std::size_t size() const { return quotes_.size(); }
  bool empty() const { return quotes_.empty(); }
  const Quote& operator[](std::size_t i) const { return quotes_[i]; }

  std::vector<double> closes() const;

  // Content hash of instrument, bar size and every quote.
  std::string id() const;

  // Same timestamps and instrument with replaced closes (must be > 0).
  Series with_closes(std::vector<std::int64_t> closes) const;

  friend bool operator==(const Series&, const Series&) = default;

 private:
  struct Unchecked {};
  Series(Unchecked, InstrumentSpec instrument, std::vector<Quote> quotes,
         std::int64_t bar_seconds);

  friend Series resample(const Series&, std::int64_t);
  friend std::tuple<Series, Series, Series> split(const Series&, const SampleSplit&);

  InstrumentSpec instrument_;
  std::vector<Quote> quotes_;
  std::int64_t bar_seconds_;
};

// Reads `timestamp,close` CSV, optionally preceded by '#' comment lines.
// Rows are sorted by timestamp; duplicates, malformed rows and empty files
// raise DataError.
Series load_csv(const std::filesystem::path& path, const InstrumentSpec& spec,
                std::int64_t bar_seconds);
Series parse_csv(std::string_view text, const InstrumentSpec& spec, std::int64_t bar_seconds);

// Canonical CSV text: header, LF endings, closes with the tick's decimals.
std::string to_csv(const Series& s);
void write_csv(const Series& s, const std::filesystem::path& path);

// Keeps the last close of each run of `factor` consecutive quotes.
Series resample(const Series& s, std::int64_t factor);

// r_k = ln(close[k+lag] / close[k]).
std::vector<double> log_returns(const Series& s, std::size_t lag = 1);

// In-, out- and live-sample sub-series. Only the in-sample must be non-empty.
std::tuple<Series, Series, Series> split(const Series& s, const SampleSplit& sp);

}  // namespace trendlab
