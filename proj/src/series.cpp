#include "trendlab/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "trendlab/digest.hpp"
#include "trendlab/error.hpp"

namespace trendlab {

namespace {

constexpr int kMaxScale = 18;

__int128 pow10_i128(int n) {
  __int128 v = 1;
  for (int i = 0; i < n; ++i) v *= 10;
  return v;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

Decimal Decimal::parse(std::string_view text) {
  const std::string original(text);
  auto fail = [&]() -> Decimal { throw DataError("not a decimal number: '" + original + "'"); };
  if (text.empty()) return fail();

  bool negative = false;
  if (text.front() == '+' || text.front() == '-') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  __int128 units = 0;
  int scale = 0;
  bool seen_digit = false;
  bool seen_point = false;
  std::size_t i = 0;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      seen_digit = true;
      units = units * 10 + (c - '0');
      if (seen_point) ++scale;
      if (units > static_cast<__int128>(INT64_MAX) || scale > kMaxScale) return fail();
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) return fail();
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') return fail();
    int exponent = 0;
    auto rest = text.substr(i + 1);
    if (!rest.empty() && rest.front() == '+') rest.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), exponent);
    if (ec != std::errc{} || ptr != rest.data() + rest.size() || std::abs(exponent) > kMaxScale) {
      return fail();
    }
    scale -= exponent;
  }
  while (scale < 0) {
    units *= 10;
    ++scale;
    if (units > static_cast<__int128>(INT64_MAX)) return fail();
  }
  if (scale > kMaxScale) return fail();
  const auto value = static_cast<std::int64_t>(units);
  return Decimal{negative ? -value : value, scale};
}

std::string Decimal::to_string() const {
  const bool negative = units < 0;
  const auto magnitude = negative ? 0ULL - static_cast<unsigned long long>(units)
                                  : static_cast<unsigned long long>(units);
  const std::string digits = std::to_string(magnitude);
  std::string out = negative ? "-" : "";
  if (scale == 0) return out + digits;
  std::string padded = digits;
  if (padded.size() <= static_cast<std::size_t>(scale)) {
    padded.insert(0, static_cast<std::size_t>(scale) + 1 - padded.size(), '0');
  }
  const std::size_t cut = padded.size() - static_cast<std::size_t>(scale);
  return out + padded.substr(0, cut) + "." + padded.substr(cut);
}

double Decimal::to_double() const {
  return static_cast<double>(units) / std::pow(10.0, scale);
}

void InstrumentSpec::validate() const {
  if (tick_value.units <= 0) throw InvalidArgument("instrument " + name + ": tick_value must be > 0");
  if (slippage_bp < 0) throw InvalidArgument("instrument " + name + ": slippage_bp must be >= 0");
  if (fee_multiplier < 1) {
    throw InvalidArgument("instrument " + name + ": fee_multiplier must be >= 1");
  }
}

InstrumentSpec ec_instrument() { return InstrumentSpec{"EC", Decimal{1, 4}, 1, 2}; }

InstrumentSpec fdax_instrument() { return InstrumentSpec{"FDAX", Decimal{1, 0}, 1, 1}; }

std::int64_t price_to_ticks(const Decimal& price, const Decimal& tick_value) {
  if (tick_value.units <= 0) throw InvalidArgument("tick_value must be > 0");
  const __int128 num = static_cast<__int128>(price.units) * pow10_i128(tick_value.scale);
  const __int128 den = static_cast<__int128>(tick_value.units) * pow10_i128(price.scale);
  __int128 q = num / den;
  const __int128 r = num % den;
  const __int128 abs_r = r < 0 ? -r : r;
  if (2 * abs_r >= den) q += (num < 0) ? -1 : 1;
  if (q > INT64_MAX || q < INT64_MIN) throw DataError("price out of range");
  return static_cast<std::int64_t>(q);
}

std::string format_price(std::int64_t ticks, const Decimal& tick_value) {
  const __int128 units = static_cast<__int128>(ticks) * tick_value.units;
  if (units > INT64_MAX || units < INT64_MIN) throw DataError("price out of range");
  return Decimal{static_cast<std::int64_t>(units), tick_value.scale}.to_string();
}

void SampleSplit::validate() const {
  for (const auto* r : {&in_range, &out_range, &live_range}) {
    if (r->start >= r->end) throw InvalidArgument("sample range must satisfy start < end");
  }
  if (in_range.end > out_range.start || out_range.end > live_range.start) {
    throw InvalidArgument("sample ranges must be disjoint and ordered in < out < live");
  }
}

Series::Series(InstrumentSpec instrument, std::vector<Quote> quotes, std::int64_t bar_seconds)
    : Series(Unchecked{}, std::move(instrument), std::move(quotes), bar_seconds) {
  for (std::size_t i = 1; i < quotes_.size(); ++i) {
    if ((quotes_[i].timestamp - quotes_[i - 1].timestamp) % bar_seconds_ != 0) {
      throw DataError("quote at " + std::to_string(quotes_[i].timestamp) +
                      " is off the " + std::to_string(bar_seconds_) + "s bar grid");
    }
  }
}

Series::Series(Unchecked, InstrumentSpec instrument, std::vector<Quote> quotes,
               std::int64_t bar_seconds)
    : instrument_(std::move(instrument)), quotes_(std::move(quotes)), bar_seconds_(bar_seconds) {
  instrument_.validate();
  if (bar_seconds_ <= 0) throw InvalidArgument("bar_seconds must be > 0");
  for (std::size_t i = 0; i < quotes_.size(); ++i) {
    if (quotes_[i].close <= 0) {
      throw DataError("non-positive close at " + std::to_string(quotes_[i].timestamp));
    }
    if (i > 0 && quotes_[i].timestamp <= quotes_[i - 1].timestamp) {
      throw DataError("timestamps not strictly increasing at " +
                      std::to_string(quotes_[i].timestamp));
    }
  }
}

std::vector<double> Series::closes() const {
  std::vector<double> out;
  out.reserve(quotes_.size());
  for (const auto& q : quotes_) out.push_back(static_cast<double>(q.close));
  return out;
}

std::string Series::id() const {
  Digest d;
  d.update(instrument_.name).update(instrument_.tick_value.units);
  d.update(static_cast<std::int64_t>(instrument_.tick_value.scale));
  d.update(instrument_.slippage_bp).update(instrument_.fee_multiplier).update(bar_seconds_);
  for (const auto& q : quotes_) d.update(q.timestamp).update(q.close);
  return d.hex();
}

Series Series::with_closes(std::vector<std::int64_t> closes) const {
  if (closes.size() != quotes_.size()) throw InvalidArgument("close count does not match the series length");
  std::vector<Quote> q(quotes_.begin(), quotes_.end());
  for (std::size_t i = 0; i < q.size(); ++i) q[i].close = closes[i];
  return Series(Unchecked{}, instrument_, std::move(q), bar_seconds_);
}

Series parse_csv(std::string_view text, const InstrumentSpec& spec, std::int64_t bar_seconds) {
  spec.validate();
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    const auto eol = text.find('\n', pos);
    const auto end = eol == std::string_view::npos ? text.size() : eol;
    line = trim_cr(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    return true;
  };

  std::string_view line;
  bool have = next_line(line);
  while (have && line.starts_with('#')) have = next_line(line);  // leading provenance comments
  if (!have || line.empty()) throw DataError("empty file");
  if (line != "timestamp,close") {
    throw DataError("expected header 'timestamp,close', got '" + std::string(line) + "'", line_no);
  }

  struct Row {
    Quote quote;
    std::size_t line;
  };
  std::vector<Row> rows;
  while (next_line(line)) {
    if (line.empty() && pos >= text.size()) break;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
      throw DataError("expected 2 fields", line_no);
    }
    const auto ts_text = line.substr(0, comma);
    std::int64_t ts = 0;
    auto [ptr, ec] = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(), ts);
    if (ec != std::errc{} || ptr != ts_text.data() + ts_text.size()) {
      throw DataError("bad timestamp '" + std::string(ts_text) + "'", line_no);
    }
    std::int64_t ticks = 0;
    try {
      ticks = price_to_ticks(Decimal::parse(line.substr(comma + 1)), spec.tick_value);
    } catch (const DataError& e) {
      throw DataError(e.what(), line_no);
    }
    if (ticks <= 0) throw DataError("close must be positive", line_no);
    rows.push_back({{ts, ticks}, line_no});
  }
  if (rows.empty()) throw DataError("empty file");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.quote.timestamp < b.quote.timestamp; });
  std::vector<Quote> quotes;
  quotes.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].quote.timestamp == rows[i - 1].quote.timestamp) {
      throw DataError("duplicate timestamp " + std::to_string(rows[i].quote.timestamp),
                      std::max(rows[i].line, rows[i - 1].line));
    }
    quotes.push_back(rows[i].quote);
  }
  return Series(spec, std::move(quotes), bar_seconds);
}

Series load_csv(const std::filesystem::path& path, const InstrumentSpec& spec,
                std::int64_t bar_seconds) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), spec, bar_seconds);
}

std::string to_csv(const Series& s) {
  std::string out = "timestamp,close\n";
  out.reserve(out.size() + s.size() * 24);
  for (const auto& q : s.quotes()) {
    out += std::to_string(q.timestamp);
    out += ',';
    out += format_price(q.close, s.instrument().tick_value);
    out += '\n';
  }
  return out;
}

void write_csv(const Series& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_csv(s);
  if (!out) throw Error("write failed: " + path.string());
}

Series resample(const Series& s, std::int64_t factor) {
  if (factor < 1) throw InvalidArgument("resample factor must be >= 1");
  const auto f = static_cast<std::size_t>(factor);
  std::vector<Quote> kept;
  kept.reserve((s.size() + f - 1) / f);
  for (std::size_t end = f; end - f < s.size(); end += f) {
    kept.push_back(s[std::min(end, s.size()) - 1]);
  }
  // The trailing partial bar may sit off the coarse grid.
  return Series(Series::Unchecked{}, s.instrument(), std::move(kept), s.bar_seconds() * factor);
}

std::vector<double> log_returns(const Series& s, std::size_t lag) {
  if (lag < 1) throw InvalidArgument("lag must be >= 1");
  if (s.size() <= lag) {
    throw InvalidArgument("series of length " + std::to_string(s.size()) +
                          " too short for lag " + std::to_string(lag));
  }
  std::vector<double> out(s.size() - lag);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = std::log(static_cast<double>(s[k + lag].close) / static_cast<double>(s[k].close));
  }
  return out;
}

std::tuple<Series, Series, Series> split(const Series& s, const SampleSplit& sp) {
  sp.validate();
  std::vector<Quote> parts[3];
  const TimeRange* ranges[3] = {&sp.in_range, &sp.out_range, &sp.live_range};
  for (const auto& q : s.quotes()) {
    for (int i = 0; i < 3; ++i) {
      if (ranges[i]->contains(q.timestamp)) {
        parts[i].push_back(q);
        break;
      }
    }
  }
  if (parts[0].empty()) throw InvalidArgument("empty in-sample");
  auto make = [&](std::vector<Quote> q) {
    return Series(Series::Unchecked{}, s.instrument(), std::move(q), s.bar_seconds());
  };
  return {make(std::move(parts[0])), make(std::move(parts[1])), make(std::move(parts[2]))};
}

}  // namespace trendlab
