#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "trendlab/error.hpp"
#include "trendlab/numeric.hpp"
#include "trendlab/qstats.hpp"
#include "trendlab/rng.hpp"
#include "trendlab/synthdata.hpp"

using namespace trendlab;

namespace {

// Closed-form normalization of exp_q(-beta x^2) via Gamma functions; an
// independent route to the quadrature inside QGaussianModel.
double closed_form_z(double q, double beta) {
  const double pi = std::numbers::pi;
  double c;
  if (q < 1.0) {
    c = 2.0 * std::sqrt(pi) * std::tgamma(1.0 / (1.0 - q)) /
        ((3.0 - q) * std::sqrt(1.0 - q) * std::tgamma((3.0 - q) / (2.0 * (1.0 - q))));
  } else if (q == 1.0) {
    c = std::sqrt(pi);
  } else {
    c = std::sqrt(pi) * std::tgamma((3.0 - q) / (2.0 * (q - 1.0))) /
        (std::sqrt(q - 1.0) * std::tgamma(1.0 / (q - 1.0)));
  }
  return c / std::sqrt(beta);
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// CDF at each sorted sample: integrate outward from xbar (CDF = 1/2 there)
// with 10-point Gauss-Legendre on each gap.
std::vector<double> cdf_at_sorted(const QGaussianModel& m, const std::vector<double>& sorted) {
  auto pdf = [&](double x) { return qgauss_pdf(m, x); };
  using GL = boost::math::quadrature::gauss<double, 10>;
  std::vector<double> out(sorted.size());
  const auto mid = std::lower_bound(sorted.begin(), sorted.end(), m.xbar()) - sorted.begin();
  double acc = 0.5;
  double prev = m.xbar();
  for (auto i = mid; i < static_cast<std::ptrdiff_t>(sorted.size()); ++i) {
    acc += GL::integrate(pdf, prev, sorted[static_cast<std::size_t>(i)]);
    prev = sorted[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  acc = 0.5;
  prev = m.xbar();
  for (auto i = mid - 1; i >= 0; --i) {
    acc -= GL::integrate(pdf, sorted[static_cast<std::size_t>(i)], prev);
    prev = sorted[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

double ks_distance(const QGaussianModel& m, std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const auto cdf = cdf_at_sorted(m, samples);
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    d = std::max({d, std::abs(cdf[i] - static_cast<double>(i) / n),
                  std::abs(cdf[i] - static_cast<double>(i + 1) / n)});
  }
  return d;
}

InstrumentSpec plain() {
  InstrumentSpec s;
  s.tick_value = Decimal{1, 0};
  return s;
}

}  // namespace

TEST_CASE("Gaussian limit of the density") {
  const QGaussianModel m(1.0 + 1e-9, 0.5);
  for (double x : {0.0, 1.0, 2.0, -1.5, 3.0}) {
    CHECK(std::abs(qgauss_pdf(m, x) - normal_pdf(x)) <= 1e-6);
  }
  const QGaussianModel exact(1.0, 0.5);
  for (double x : {0.0, 1.0, 2.0}) CHECK(qgauss_pdf(exact, x) == doctest::Approx(normal_pdf(x)).epsilon(1e-10));
}

TEST_CASE("density converges to the Gaussian as q -> 1") {
  // The deviation is first order in |q - 1|: about 1e-7 at |q - 1| = 1e-6.
  for (double eps : {1e-6, -1e-6, 1e-9, -1e-9}) {
    const QGaussianModel m(1.0 + eps, 0.5);
    double worst = 0.0;
    for (double x = -6.0; x <= 6.0; x += 0.25) worst = std::max(worst, std::abs(qgauss_pdf(m, x) - normal_pdf(x)));
    CAPTURE(eps);
    CHECK(worst <= std::abs(eps));
  }
}

TEST_CASE("compact support for q < 1") {
  const QGaussianModel m(0.5, 1.0);
  CHECK(m.support_half_width() == doctest::Approx(std::sqrt(2.0)));
  CHECK(qgauss_pdf(m, 1.5) == 0.0);
  CHECK(qgauss_pdf(m, -1.5) == 0.0);
  CHECK(qgauss_pdf(m, 10.0) == 0.0);
  CHECK(qgauss_pdf(m, 1.4) > 0.0);
  CHECK(std::isinf(QGaussianModel(1.5, 1.0).support_half_width()));
}

TEST_CASE("normalization matches the closed form") {
  for (double q : {0.5, 0.6, 0.9, 1.0, 1.2, 1.5, 1.7, 2.0, 2.5, 2.9}) {
    for (double beta : {0.3, 1.0, 7.0}) {
      CAPTURE(q);
      CAPTURE(beta);
      const QGaussianModel m(q, beta, 0.4);
      // integral of the pdf = Z_true / Z_model
      CHECK(std::abs(closed_form_z(q, beta) / m.z_q() - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("pdf integrates to one by direct quadrature") {
  for (double q : {0.6, 1.0, 1.5, 2.0, 2.5}) {
    CAPTURE(q);
    const QGaussianModel m(q, 1.0, -0.3);
    boost::math::quadrature::exp_sinh<double> tail;
    auto right = [&](double y) { return qgauss_pdf(m, m.xbar() + y); };
    double total = 0.0;
    if (q < 1.0) {
      using GL = boost::math::quadrature::gauss<double, 30>;
      const double a = m.support_half_width();
      for (int k = 0; k < 64; ++k) total += GL::integrate(right, a * k / 64, a * (k + 1) / 64);
      total *= 2.0;
    } else {
      total = 2.0 * tail.integrate(right, 0.0, std::numeric_limits<double>::infinity(), 1e-13);
    }
    CHECK(std::abs(total - 1.0) <= 1e-6);
  }
}

TEST_CASE("pdf is symmetric about the location") {
  Rng rng(3);
  for (double q : {0.6, 1.0, 1.5, 2.5}) {
    // dyadic location and offsets so xbar +- d are exact in binary
    const QGaussianModel m(q, 2.0, 0.125);
    for (int i = 0; i < 100; ++i) {
      const double d = static_cast<double>(rng.uniform_int(0, 256)) / 64.0;
      CHECK(qgauss_pdf(m, m.xbar() + d) == qgauss_pdf(m, m.xbar() - d));
    }
  }
}

TEST_CASE("inverse beta is proportional to the variance when it exists") {
  // For q < 5/3 the variance is 1 / (beta (5 - 3q)); check var * beta is
  // independent of beta and equals that constant.
  for (double q : {0.6, 1.0, 1.3, 1.5}) {
    for (double beta : {0.5, 1.0, 4.0}) {
      CAPTURE(q);
      CAPTURE(beta);
      const QGaussianModel m(q, beta);
      boost::math::quadrature::exp_sinh<double> tail;
      auto second_moment = [&](double y) { return y * y * qgauss_pdf(m, y); };
      double var;
      if (q < 1.0) {
        using GL = boost::math::quadrature::gauss<double, 30>;
        const double a = m.support_half_width();
        var = 0.0;
        for (int k = 0; k < 64; ++k) var += GL::integrate(second_moment, a * k / 64, a * (k + 1) / 64);
        var *= 2.0;
      } else {
        var = 2.0 * tail.integrate(second_moment, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
      }
      CHECK(var * beta == doctest::Approx(1.0 / (5.0 - 3.0 * q)).epsilon(1e-5));
    }
  }
}

TEST_CASE("model construction rejects invalid parameters") {
  CHECK_THROWS_AS(QGaussianModel(3.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(QGaussianModel(3.5, 1.0), InvalidArgument);
  CHECK_THROWS_AS(QGaussianModel(1.5, 0.0), InvalidArgument);
  CHECK_THROWS_AS(QGaussianModel(1.5, -1.0), InvalidArgument);
  CHECK_THROWS_AS(QGaussianModel(std::nan(""), 1.0), InvalidArgument);
}

TEST_CASE("sampling is deterministic") {
  const QGaussianModel m(1.5, 1.0);
  CHECK(qgauss_sample(m, 1000, 42) == qgauss_sample(m, 1000, 42));
  CHECK(qgauss_sample(m, 1000, 42) != qgauss_sample(m, 1000, 43));
}

TEST_CASE("sampling near q = 1 is Gaussian") {
  const QGaussianModel m(1.0 + 1e-9, 0.5, 2.0);
  const auto x = qgauss_sample(m, 200'000, 1);
  // standard error of the mean is 1/sqrt(n) ~ 0.0022
  CHECK(std::abs(mean(x) - 2.0) <= 0.01);
  CHECK(std::pow(population_stddev(x), 2) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("samples follow the density (Kolmogorov-Smirnov)") {
  for (double q : {1.5, 0.7, 2.2}) {
    CAPTURE(q);
    const QGaussianModel m(q, 1.0);
    CHECK(ks_distance(m, qgauss_sample(m, 100'000, 2024)) < 0.01);
  }
}

TEST_CASE("maximum-likelihood fit recovers q from its own samples") {
  const QGaussianModel m(1.5, 1.0);
  const auto fit = qgauss_fit(qgauss_sample(m, 100'000, 7));
  CHECK(fit.model.q() >= 1.45);
  CHECK(fit.model.q() <= 1.55);
  CHECK(std::isfinite(fit.log_likelihood));
  CHECK(fit.iterations > 0);
}

TEST_CASE("maximum-likelihood fit on Gaussian samples gives q near 1") {
  Rng rng(8);
  std::vector<double> x(100'000);
  for (auto& v : x) v = rng.normal();
  const auto fit = qgauss_fit(x);
  CHECK(fit.model.q() >= 0.95);
  CHECK(fit.model.q() <= 1.05);
  CHECK(fit.model.beta() == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("fit/sample round trip within 5%") {
  for (double q : {1.2, 1.5, 1.7}) {
    CAPTURE(q);
    const QGaussianModel truth(q, 40.0, 0.01);
    const auto fit = qgauss_fit(qgauss_sample(truth, 100'000, 100 + static_cast<int>(q * 10)));
    CHECK(fit.model.q() == doctest::Approx(q).epsilon(0.05));
    CHECK(fit.model.beta() == doctest::Approx(40.0).epsilon(0.05));
    // location relative to the scale 1/sqrt(beta)
    CHECK(std::abs(fit.model.xbar() - 0.01) * std::sqrt(40.0) <= 0.05);
  }
}

TEST_CASE("fit errors") {
  CHECK_THROWS_AS(qgauss_fit(std::vector<double>(999, 0.0)), InvalidArgument);
  const auto x = qgauss_sample(QGaussianModel(1.4, 1.0), 5000, 1);
  QFitOptions tight;
  tight.max_iterations = 5;
  try {
    (void)qgauss_fit(x, tight);
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(std::isfinite(e.best().log_likelihood));
    CHECK(e.best().model.q() < 3.0);
  }
}

TEST_CASE("scaling check on a Gaussian walk gives exponent -1") {
  GeneratorSpec g;
  g.n_bars = 100'017;
  g.seed = 12;
  g.sigma = 1e-4;
  g.initial_price_ticks = 1'000'000'000;
  const auto s = generate(g, plain());
  const std::vector<std::size_t> lags = {1, 2, 4, 8, 16};
  const auto fit = scaling_check(s, 1.0, lags, 0);
  CHECK(fit.exponent_predicted == doctest::Approx(-1.0));
  CHECK(std::abs(fit.exponent_fitted + 1.0) <= 0.1);
  CHECK(fit.table.size() == 5);
  CHECK_FALSE(fit.ratio_exponent_fitted.has_value());

  // With a reference lag the ratio regression is also reported.
  const std::vector<std::size_t> lags2 = {1, 2, 4, 8};
  const auto fit2 = scaling_check(s, 1.0, lags2, 1);
  REQUIRE(fit2.ratio_exponent_fitted.has_value());
  CHECK(std::abs(*fit2.ratio_exponent_fitted + 1.0) <= 0.1);
  CHECK(fit2.beta_tau0.has_value());
  CHECK(fit2.table.size() == 3);
}

TEST_CASE("scaling check argument errors and the predicted exponent") {
  GeneratorSpec g;
  g.n_bars = 5000;
  g.initial_price_ticks = 1'000'000'000;
  const auto s = generate(g, plain());
  const std::vector<std::size_t> one = {4};
  CHECK_THROWS_AS(scaling_check(s, 1.0, one, 0), InvalidArgument);
  const std::vector<std::size_t> below = {1, 2, 4};
  CHECK_THROWS_AS(scaling_check(s, 1.0, below, 2), InvalidArgument);
  CHECK(-2.0 / (3.0 - 1.5) == doctest::Approx(-1.3333).epsilon(1e-4));
  const std::vector<std::size_t> lags = {1, 2};
  CHECK(scaling_check(s, 1.5, lags, 0).exponent_predicted == doctest::Approx(-4.0 / 3.0));
}
