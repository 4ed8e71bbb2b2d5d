#pragma once

#include <span>

namespace trendlab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;  // from residuals; 0 for two points
};

// Ordinary least squares y = intercept + slope * x. Needs >= 2 distinct x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
// Population standard deviation (divides by n).
double population_stddev(std::span<const double> v);
// Sample standard deviation (divides by n - 1).
double sample_stddev(std::span<const double> v);

}  // namespace trendlab

#include <functional>
#include <vector>

namespace trendlab {

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SimplexOptions {
  int max_iterations = 10000;
  // Stop when the spread of objective values across the simplex is below
  // value_tolerance.
  double value_tolerance = 1e-8;
};

// Nelder-Mead minimization. The objective may return +inf for infeasible
// points; the initial simplex is x0 plus one step along each axis.
SimplexResult minimize_simplex(const std::function<double(std::span<const double>)>& objective,
                               std::vector<double> x0, std::span<const double> steps,
                               const SimplexOptions& options = {});

}  // namespace trendlab
