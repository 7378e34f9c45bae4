#pragma once

#include <cmath>
#include <vector>

#include "qfigeo/errors.hpp"

namespace qfigeo {

// Richardson extrapolation for samples taken at geometrically halved steps
// h, h/2, h/4, ... with an error series c1*h^p + c2*h^(p+s) + ...
// Works for scalars and Eigen matrices alike (anything with +, -, * double).
template <typename T>
T richardson_geometric(const std::vector<T>& samples, int leading_order, int order_step) {
  if (samples.empty()) {
    throw Error(Errc::validation_error, "richardson needs at least one sample");
  }
  std::vector<T> row = samples;
  int order = leading_order;
  while (row.size() > 1) {
    const double w = std::pow(2.0, order);
    std::vector<T> next;
    next.reserve(row.size() - 1);
    for (std::size_t i = 0; i + 1 < row.size(); ++i) {
      next.push_back((w * row[i + 1] - row[i]) * (1.0 / (w - 1.0)));
    }
    row = std::move(next);
    order += order_step;
  }
  return row.front();
}

// Same tableau but also reports the change across the final elimination step,
// which callers use as a convergence estimate.
template <typename T, typename NormFn>
T richardson_geometric_checked(const std::vector<T>& samples, int leading_order,
                               int order_step, NormFn norm, double rel_tol,
                               const char* what) {
  if (samples.size() < 2) {
    throw Error(Errc::validation_error, "richardson convergence check needs >= 2 samples");
  }
  std::vector<T> row = samples;
  int order = leading_order;
  T prev = row.back();
  while (row.size() > 1) {
    const double w = std::pow(2.0, order);
    std::vector<T> next;
    next.reserve(row.size() - 1);
    for (std::size_t i = 0; i + 1 < row.size(); ++i) {
      next.push_back((w * row[i + 1] - row[i]) * (1.0 / (w - 1.0)));
    }
    prev = row.back();
    row = std::move(next);
    order += order_step;
  }
  const double scale = std::max(1.0, norm(row.front()));
  if (norm(row.front() - prev) > rel_tol * scale) {
    throw Error(Errc::extrapolation_diverged, what);
  }
  return row.front();
}

// Neville polynomial extrapolation to x = 0 through arbitrary positive nodes.
template <typename T>
T neville_to_zero(const std::vector<double>& xs, const std::vector<T>& ys) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw Error(Errc::validation_error, "neville needs matching non-empty nodes");
  }
  std::vector<T> col = ys;
  const std::size_t n = xs.size();
  for (std::size_t level = 1; level < n; ++level) {
    for (std::size_t i = 0; i + level < n; ++i) {
      const double xi = xs[i];
      const double xj = xs[i + level];
      // P(0) for the polynomial through nodes i..i+level
      col[i] = (xi * col[i + 1] - xj * col[i]) * (1.0 / (xi - xj));
    }
  }
  return col.front();
}

// Variant returning the last-step change for divergence detection.
template <typename T, typename NormFn>
T neville_to_zero_checked(const std::vector<double>& xs, const std::vector<T>& ys,
                          NormFn norm, double rel_tol, const char* what) {
  if (xs.size() < 2) {
    throw Error(Errc::validation_error, "neville convergence check needs >= 2 nodes");
  }
  std::vector<T> col = ys;
  const std::size_t n = xs.size();
  T prev = col.front();
  for (std::size_t level = 1; level < n; ++level) {
    prev = col.front();
    for (std::size_t i = 0; i + level < n; ++i) {
      const double xi = xs[i];
      const double xj = xs[i + level];
      col[i] = (xi * col[i + 1] - xj * col[i]) * (1.0 / (xi - xj));
    }
  }
  const double scale = std::max(1.0, norm(col.front()));
  if (norm(col.front() - prev) > rel_tol * scale) {
    throw Error(Errc::extrapolation_diverged, what);
  }
  return col.front();
}

}  // namespace qfigeo
