#include "trendlab/qstats.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "trendlab/numeric.hpp"
#include "trendlab/rng.hpp"

namespace trendlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadTolerance = 1e-12;

// log of the unnormalized unit kernel at offset y (beta already folded in).
double log_kernel(double q, double beta_y2) {
  if (q == 1.0) return -beta_y2;
  const double u = -(1.0 - q) * beta_y2;
  if (u <= -1.0) return -kInf;  // outside the compact support
  return std::log1p(u) / (1.0 - q);
}

}  // namespace

double qgauss_unit_normalization(double q) {
  if (!(q < 3.0) || !std::isfinite(q)) throw InvalidArgument("q-Gaussian needs q < 3");
  auto kernel = [q](double y) { return std::exp(log_kernel(q, y * y)); };
  double half = 0.0;
  if (q < 1.0) {
    // The kernel is bounded by exp(-y^2), negligible past sqrt(60).
    const double upper = std::min(1.0 / std::sqrt(1.0 - q), std::sqrt(60.0));
    boost::math::quadrature::tanh_sinh<double> integrator;
    half = integrator.integrate(kernel, 0.0, upper, kQuadTolerance);
  } else {
    boost::math::quadrature::exp_sinh<double> integrator;
    half = integrator.integrate(kernel, 0.0, kInf, kQuadTolerance);
  }
  return 2.0 * half;
}

QGaussianModel::QGaussianModel(double q, double beta, double xbar)
    : q_(q), beta_(beta), xbar_(xbar) {
  if (!std::isfinite(q) || !(q < 3.0)) throw InvalidArgument("q-Gaussian needs q < 3");
  if (!std::isfinite(beta) || !(beta > 0.0)) throw InvalidArgument("q-Gaussian needs beta > 0");
  if (!std::isfinite(xbar)) throw InvalidArgument("q-Gaussian needs a finite location");
  z_q_ = qgauss_unit_normalization(q) / std::sqrt(beta);
}

double QGaussianModel::support_half_width() const {
  if (q_ >= 1.0) return kInf;
  return 1.0 / std::sqrt(beta_ * (1.0 - q_));
}

double qgauss_log_pdf(const QGaussianModel& m, double x) {
  const double y = x - m.xbar();
  return log_kernel(m.q(), m.beta() * y * y) - std::log(m.z_q());
}

double qgauss_pdf(const QGaussianModel& m, double x) {
  const double y = x - m.xbar();
  const double lk = log_kernel(m.q(), m.beta() * y * y);
  if (lk == -kInf) return 0.0;
  return std::exp(lk) / m.z_q();
}

namespace {

double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

QGaussianFit qgauss_fit(std::span<const double> samples, const QFitOptions& options) {
  if (samples.size() < 1000) throw InvalidArgument("q-Gaussian fit needs at least 1000 samples");
  for (double x : samples) {
    if (!std::isfinite(x)) throw InvalidArgument("q-Gaussian fit: non-finite sample");
  }
  const double n = static_cast<double>(samples.size());
  const double center = median_of({samples.begin(), samples.end()});
  std::vector<double> dev;
  dev.reserve(samples.size());
  for (double x : samples) dev.push_back(std::abs(x - center));
  double scale = 1.4826 * median_of(std::move(dev));
  if (!(scale > 0.0)) scale = population_stddev(samples);
  if (!(scale > 0.0)) throw InvalidArgument("q-Gaussian fit: samples have zero spread");

  // Parameters: (q, log beta, location / scale).
  auto neg_mean_ll = [&](std::span<const double> p) {
    const double q = p[0];
    if (!(q >= options.q_min && q <= options.q_max)) return kInf;
    const double beta = std::exp(p[1]);
    const double xbar = p[2] * scale;
    if (!std::isfinite(beta) || beta <= 0.0) return kInf;
    double sum = 0.0;
    for (double x : samples) {
      const double y = x - xbar;
      const double lk = log_kernel(q, beta * y * y);
      if (lk == -kInf) return kInf;
      sum += lk;
    }
    const double log_z = std::log(qgauss_unit_normalization(q)) - 0.5 * std::log(beta);
    const double value = -(sum / n - log_z);
    return std::isfinite(value) ? value : kInf;
  };

  const double log_beta0 = -std::log(2.0 * scale * scale);
  const std::vector<double> steps = {0.2, 0.5, 0.5};
  SimplexOptions so;
  so.value_tolerance = options.tolerance;

  SimplexResult best;
  best.value = kInf;
  int total_iterations = 0;
  for (double q0 : {1.0, 1.5}) {
    so.max_iterations = options.max_iterations - total_iterations;
    if (so.max_iterations <= 0) break;
    auto r = minimize_simplex(neg_mean_ll, {q0, log_beta0, center / scale}, steps, so);
    total_iterations += r.iterations;
    if (r.value < best.value) best = std::move(r);
  }
  // Restart from the best vertex with a fresh simplex.
  so.max_iterations = std::max(options.max_iterations - total_iterations, 0);
  bool converged = false;
  if (so.max_iterations > 0 && std::isfinite(best.value)) {
    auto r = minimize_simplex(neg_mean_ll, best.x, std::vector<double>{0.05, 0.1, 0.1}, so);
    total_iterations += r.iterations;
    converged = r.converged;
    if (r.value <= best.value) best = std::move(r);
  }

  if (!std::isfinite(best.value)) {
    throw FitError("q-Gaussian fit found no feasible parameters",
                   QGaussianFit{QGaussianModel(1.0, std::exp(log_beta0), center), -kInf,
                                total_iterations});
  }
  QGaussianFit fit{QGaussianModel(best.x[0], std::exp(best.x[1]), best.x[2] * scale),
                   -best.value * n, total_iterations};
  if (!converged) {
    throw FitError("q-Gaussian fit did not converge in " + std::to_string(options.max_iterations) +
                       " iterations",
                   fit);
  }
  return fit;
}

std::vector<double> qgauss_sample(const QGaussianModel& m, std::size_t n, std::uint64_t seed) {
  // If U1, U2 are uniform, sqrt(-2 ln_{q'} U1) cos(2 pi U2) with
  // q' = (1 + q) / (3 - q) is q-Gaussian with beta = 1 / (3 - q).
  const double q = m.q();
  const double q_prime = (1.0 + q) / (3.0 - q);
  const double scale = std::sqrt(1.0 / ((3.0 - q) * m.beta()));
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = rng.uniform_open01();
    const double u2 = rng.uniform01();
    const double ln_q = q_prime == 1.0 ? std::log(u1)
                                       : (std::pow(u1, 1.0 - q_prime) - 1.0) / (1.0 - q_prime);
    const double z = std::sqrt(-2.0 * ln_q) * std::cos(2.0 * std::numbers::pi * u2);
    out.push_back(m.xbar() + scale * z);
  }
  return out;
}

ScalingFit scaling_check(const Series& s, double q, std::span<const std::size_t> lags,
                         std::size_t tau0, const QFitOptions& options) {
  if (!(q < 3.0)) throw InvalidArgument("scaling check needs q < 3");
  std::vector<std::size_t> above;
  for (std::size_t lag : lags) {
    if (lag < tau0) {
      throw InvalidArgument("lag " + std::to_string(lag) + " is below tau0 " + std::to_string(tau0));
    }
    if (lag > tau0) above.push_back(lag);
  }
  if (above.size() < 2) throw InvalidArgument("scaling regression needs at least 2 lags above tau0");

  auto fit_at = [&](std::size_t lag) {
    const auto rets = log_returns(s, lag);
    try {
      return std::pair{qgauss_fit(rets, options), rets.size()};
    } catch (const FitError& e) {
      throw FitError("lag " + std::to_string(lag) + ": " + e.what(), e.best());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("lag " + std::to_string(lag) + ": " + e.what());
    }
  };

  ScalingFit out;
  out.q_used = q;
  out.tau0 = tau0;
  out.exponent_predicted = -2.0 / (3.0 - q);
  double log_ref = 0.0;
  if (tau0 >= 1) {
    out.beta_tau0 = fit_at(tau0).first.model.beta();
    log_ref = std::log(*out.beta_tau0);
  }
  std::vector<double> x;
  std::vector<double> x_ratio;
  std::vector<double> y;
  for (std::size_t lag : above) {
    const auto [fit, count] = fit_at(lag);
    out.table.push_back({lag, fit.model.beta(), fit.model.q(), fit.model.xbar(), count});
    x.push_back(std::log(static_cast<double>(lag - tau0)));
    if (tau0 >= 1) x_ratio.push_back(std::log(static_cast<double>(lag) / static_cast<double>(tau0)));
    y.push_back(std::log(fit.model.beta()) - log_ref);
  }
  const auto line = fit_line(x, y);
  out.exponent_fitted = line.slope;
  out.exponent_stderr = line.slope_stderr;
  if (tau0 >= 1) out.ratio_exponent_fitted = fit_line(x_ratio, y).slope;
  return out;
}

}  // namespace trendlab
