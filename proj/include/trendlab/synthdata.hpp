#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "trendlab/series.hpp"

namespace trendlab {

enum class GeneratorKind { gaussian_walk, qgaussian_walk, fbm_like, trending };

GeneratorKind parse_generator_kind(std::string_view name);
std::string_view to_string(GeneratorKind kind);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::gaussian_walk;
  std::size_t n_bars = 1000;
  std::uint64_t seed = 0;
  double sigma = 1e-3;   // per-bar log-return scale (gaussian, fbm_like, trending)
  double drift = 0.0;    // per-bar log drift (trending)
  double q = 1.5;        // qgaussian_walk
  double beta = 1e6;     // qgaussian_walk
  double hurst = 0.5;    // fbm_like
  std::int64_t initial_price_ticks = 1'000'000;
  std::int64_t start_time = 946684800;  // 2000-01-01T00:00:00Z
  std::int64_t bar_seconds = 300;

  void validate() const;
};

// n_bars - 1 log-return increments for the spec.
std::vector<double> generate_increments(const GeneratorSpec& spec);

// Log-walk: close[k] = round(initial_price * exp(sum of the first k increments)).
Series generate(const GeneratorSpec& spec, const InstrumentSpec& instrument);

// Unit-variance fractional Gaussian noise. Circulant embedding for n >= 256,
// Hosking's recursion below that.
std::vector<double> fractional_gaussian_noise(std::size_t n, double hurst, std::uint64_t seed);
std::vector<double> fgn_circulant(std::size_t n, double hurst, std::uint64_t seed);
std::vector<double> fgn_hosking(std::size_t n, double hurst, std::uint64_t seed);

// Autocovariance of unit fGn at lag k.
double fgn_autocovariance(std::size_t k, double hurst);

}  // namespace trendlab
