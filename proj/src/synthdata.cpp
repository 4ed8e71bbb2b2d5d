#include "trendlab/synthdata.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "trendlab/error.hpp"
#include "trendlab/qstats.hpp"
#include "trendlab/rng.hpp"

namespace trendlab {

GeneratorKind parse_generator_kind(std::string_view name) {
  if (name == "gaussian_walk") return GeneratorKind::gaussian_walk;
  if (name == "qgaussian_walk") return GeneratorKind::qgaussian_walk;
  if (name == "fbm_like") return GeneratorKind::fbm_like;
  if (name == "trending") return GeneratorKind::trending;
  throw InvalidArgument("unknown generator kind '" + std::string(name) + "'");
}

std::string_view to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::gaussian_walk: return "gaussian_walk";
    case GeneratorKind::qgaussian_walk: return "qgaussian_walk";
    case GeneratorKind::fbm_like: return "fbm_like";
    case GeneratorKind::trending: return "trending";
  }
  return "unknown";
}

void GeneratorSpec::validate() const {
  if (n_bars < 1) throw InvalidArgument("generator needs n_bars >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("generator needs sigma >= 0");
  if (!std::isfinite(drift)) throw InvalidArgument("generator drift must be finite");
  if (kind == GeneratorKind::fbm_like && !(hurst > 0.0 && hurst < 1.0)) {
    throw InvalidArgument("fbm_like needs 0 < H < 1");
  }
  if (kind == GeneratorKind::qgaussian_walk && (!(q < 3.0) || !(beta > 0.0))) {
    throw InvalidArgument("qgaussian_walk needs q < 3 and beta > 0");
  }
  if (initial_price_ticks < 1) throw InvalidArgument("initial price must be >= 1 tick");
  if (bar_seconds < 1) throw InvalidArgument("bar_seconds must be >= 1");
}

double fgn_autocovariance(std::size_t k, double hurst) {
  const double h2 = 2.0 * hurst;
  const double kk = static_cast<double>(k);
  return 0.5 * (std::pow(kk + 1.0, h2) - 2.0 * std::pow(kk, h2) + std::pow(std::abs(kk - 1.0), h2));
}

std::vector<double> fgn_hosking(std::size_t n, double hurst, std::uint64_t seed) {
  // Durbin-Levinson recursion on the exact autocovariance.
  Rng rng(seed);
  std::vector<double> out(n);
  if (n == 0) return out;
  std::vector<double> gamma(n);
  for (std::size_t k = 0; k < n; ++k) gamma[k] = fgn_autocovariance(k, hurst);
  std::vector<double> phi(n, 0.0);
  std::vector<double> prev(n, 0.0);
  double v = gamma[0];
  out[0] = std::sqrt(v) * rng.normal();
  for (std::size_t t = 1; t < n; ++t) {
    double num = gamma[t];
    for (std::size_t j = 1; j < t; ++j) num -= prev[j] * gamma[t - j];
    const double k = num / v;
    phi[t] = k;
    for (std::size_t j = 1; j < t; ++j) phi[j] = prev[j] - k * prev[t - j];
    v *= (1.0 - k * k);
    double m = 0.0;
    for (std::size_t j = 1; j <= t; ++j) m += phi[j] * out[t - j];
    out[t] = m + std::sqrt(v) * rng.normal();
    std::copy(phi.begin(), phi.begin() + static_cast<std::ptrdiff_t>(t) + 1, prev.begin());
  }
  return out;
}

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (data == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

void fft_in_place(FftwBuffer& buf, std::size_t m) {
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(m), buf.data, buf.data, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace

std::vector<double> fgn_circulant(std::size_t n, double hurst, std::uint64_t seed) {
  // Davies-Harte: embed the autocovariance in a circulant of size m = 2^k >= 2n
  // and colour complex white noise with the square roots of its eigenvalues.
  std::vector<double> out(n);
  if (n == 0) return out;
  std::size_t m = 2;
  while (m < 2 * n) m *= 2;
  const std::size_t half = m / 2;

  FftwBuffer buf(m);
  for (std::size_t k = 0; k <= half; ++k) {
    buf.data[k][0] = fgn_autocovariance(k, hurst);
    buf.data[k][1] = 0.0;
  }
  for (std::size_t k = half + 1; k < m; ++k) {
    buf.data[k][0] = buf.data[m - k][0];
    buf.data[k][1] = 0.0;
  }
  fft_in_place(buf, m);
  std::vector<double> lambda(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double l = buf.data[k][0];
    if (l < -1e-8 * static_cast<double>(m)) {
      throw Error("circulant embedding has a negative eigenvalue");
    }
    lambda[k] = std::max(l, 0.0);
  }

  Rng rng(seed);
  const double md = static_cast<double>(m);
  buf.data[0][0] = std::sqrt(lambda[0] / md) * rng.normal();
  buf.data[0][1] = 0.0;
  buf.data[half][0] = std::sqrt(lambda[half] / md) * rng.normal();
  buf.data[half][1] = 0.0;
  for (std::size_t k = 1; k < half; ++k) {
    const double s = std::sqrt(lambda[k] / (2.0 * md));
    const double a = rng.normal();
    const double b = rng.normal();
    buf.data[k][0] = s * a;
    buf.data[k][1] = s * b;
    buf.data[m - k][0] = s * a;
    buf.data[m - k][1] = -s * b;
  }
  fft_in_place(buf, m);
  for (std::size_t k = 0; k < n; ++k) out[k] = buf.data[k][0];
  return out;
}

std::vector<double> fractional_gaussian_noise(std::size_t n, double hurst, std::uint64_t seed) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw InvalidArgument("fGn needs 0 < H < 1");
  return n >= 256 ? fgn_circulant(n, hurst, seed) : fgn_hosking(n, hurst, seed);
}

std::vector<double> generate_increments(const GeneratorSpec& spec) {
  spec.validate();
  const std::size_t count = spec.n_bars - 1;
  const std::uint64_t seed = derive_seed(spec.seed, "synthdata");
  std::vector<double> inc;
  switch (spec.kind) {
    case GeneratorKind::gaussian_walk:
    case GeneratorKind::trending: {
      const double drift = spec.kind == GeneratorKind::trending ? spec.drift : 0.0;
      Rng rng(seed);
      inc.resize(count);
      for (auto& x : inc) x = drift + spec.sigma * rng.normal();
      break;
    }
    case GeneratorKind::qgaussian_walk:
      inc = count == 0 ? std::vector<double>{}
                       : qgauss_sample(QGaussianModel(spec.q, spec.beta), count, seed);
      break;
    case GeneratorKind::fbm_like:
      inc = fractional_gaussian_noise(count, spec.hurst, seed);
      for (auto& x : inc) x *= spec.sigma;
      break;
  }
  return inc;
}

Series generate(const GeneratorSpec& spec, const InstrumentSpec& instrument) {
  const auto inc = generate_increments(spec);
  std::vector<Quote> quotes;
  quotes.reserve(spec.n_bars);
  const double p0 = static_cast<double>(spec.initial_price_ticks);
  double cum = 0.0;
  for (std::size_t k = 0; k < spec.n_bars; ++k) {
    if (k > 0) cum += inc[k - 1];
    const double price = std::round(p0 * std::exp(cum));
    if (!std::isfinite(price) || price > 4.0e18) {
      throw InvalidArgument("generated price overflows; reduce sigma, drift or length");
    }
    quotes.push_back({spec.start_time + static_cast<std::int64_t>(k) * spec.bar_seconds,
                      std::max<std::int64_t>(1, static_cast<std::int64_t>(price))});
  }
  return Series(instrument, std::move(quotes), spec.bar_seconds);
}

}  // namespace trendlab
