#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "trendlab/error.hpp"
#include "trendlab/series.hpp"

namespace trendlab {

// q-Gaussian density
//
//   P(x) = (1 / Z) * [1 - beta (1 - q) (x - xbar)^2]_+ ^ (1 / (1 - q))
//
// with the q -> 1 limit exp(-beta (x - xbar)^2) / Z. For q < 1 the support is
// the compact interval where the bracket is positive; for 1 < q < 3 it is the
// whole real line with power-law tails. Z is computed by numerical
// quadrature when the model is constructed.
class QGaussianModel {
 public:
  // Throws InvalidArgument unless q < 3, beta > 0 and everything is finite.
  QGaussianModel(double q, double beta, double xbar = 0.0);

  double q() const { return q_; }
  double beta() const { return beta_; }
  double xbar() const { return xbar_; }
  double z_q() const { return z_q_; }

  // Support half-width around xbar; +inf when q >= 1.
  double support_half_width() const;

 private:
  double q_;
  double beta_;
  double xbar_;
  double z_q_;
};

// Normalization of the unit model (beta = 1, xbar = 0). Z scales as
// unit_normalization(q) / sqrt(beta).
double qgauss_unit_normalization(double q);

double qgauss_pdf(const QGaussianModel& m, double x);
double qgauss_log_pdf(const QGaussianModel& m, double x);

struct QGaussianFit {
  QGaussianModel model;
  double log_likelihood = 0.0;
  int iterations = 0;
};

class FitError : public Error {
 public:
  FitError(const std::string& what, QGaussianFit best) : Error(what), best_(std::move(best)) {}
  const QGaussianFit& best() const { return best_; }

 private:
  QGaussianFit best_;
};

struct QFitOptions {
  double q_min = 0.5;
  double q_max = 2.9;
  int max_iterations = 10000;
  double tolerance = 1e-8;  // on the log-likelihood
};

// Maximum-likelihood fit of (q, beta, xbar). Needs at least 1000 samples.
// Throws FitError carrying the best iterate when the search does not converge.
QGaussianFit qgauss_fit(std::span<const double> samples, const QFitOptions& options = {});

// Generalized Box-Muller draws; deterministic in the seed.
std::vector<double> qgauss_sample(const QGaussianModel& m, std::size_t n, std::uint64_t seed);

struct LagBeta {
  std::size_t lag;
  double beta;
  double q;
  double xbar;
  std::size_t samples;
};

struct ScalingFit {
  double q_used = 1.0;
  std::size_t tau0 = 0;
  // Slope of log(beta(tau) / beta(tau0)) against log(tau - tau0).
  double exponent_fitted = 0.0;
  double exponent_stderr = 0.0;
  double exponent_predicted = 0.0;  // -2 / (3 - q)
  // Slope against log(tau / tau0); only defined when tau0 >= 1.
  std::optional<double> ratio_exponent_fitted;
  std::optional<double> beta_tau0;
  std::vector<LagBeta> table;  // every lag > tau0, in input order
};

// Fits beta at every lag (and at tau0 when tau0 >= 1) and regresses the
// scaling law. Lags equal to tau0 serve as the reference only; lags below
// tau0 are rejected; at least two lags above tau0 are required.
ScalingFit scaling_check(const Series& s, double q, std::span<const std::size_t> lags,
                         std::size_t tau0, const QFitOptions& options = {});

}  // namespace trendlab
