#pragma once

// Limited-memory BFGS with a strong-Wolfe line search (bracket + zoom). The
// solver records one trace entry per accepted iteration, including the
// starting point, and guarantees a non-increasing objective along the trace.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dbl/common.hpp"

namespace dbl {

struct TraceRecord {
  std::size_t iteration = 0;
  double objective = 0.0;
  double grad_inf_norm = 0.0;
  double seconds = 0.0;
};

enum class TerminationReason {
  gradient_tolerance,
  objective_tolerance,
  max_iterations,
  line_search_failure,
};

inline const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::gradient_tolerance: return "gradient_tolerance";
    case TerminationReason::objective_tolerance: return "objective_tolerance";
    case TerminationReason::max_iterations: return "max_iterations";
    case TerminationReason::line_search_failure: return "line_search_failure";
  }
  return "unknown";
}

struct SolverConfig {
  std::size_t history = 10;
  std::size_t max_iterations = 10000;
  double grad_tol = 1e-5;       // grad inf-norm <= grad_tol * max(1, |f|)
  double objective_tol = 1e-9;  // relative objective change between iterations
  double sufficient_decrease = 1e-4;
  double curvature = 0.9;
  std::size_t max_line_search_evals = 60;
};

// Evaluates the objective at `params` and writes the gradient in place.
using ObjectiveFn = std::function<double(std::span<const double>, std::span<double>)>;

struct SolveResult {
  std::vector<double> parameters;
  double objective = 0.0;
  double grad_inf_norm = 0.0;
  std::vector<TraceRecord> trace;
  TerminationReason reason = TerminationReason::max_iterations;
  std::string message;
};

namespace detail {

inline double inf_norm(std::span<const double> v) {
  double hi = 0.0;
  for (auto x : v) hi = std::max(hi, std::abs(x));
  return hi;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

inline SolveResult minimize(const ObjectiveFn& objective, std::vector<double> init,
                            const SolverConfig& cfg = {}) {
  const std::size_t dim = init.size();
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  std::vector<double> x = std::move(init);
  std::vector<double> grad(dim), x_trial(dim), grad_trial(dim), direction(dim);
  double f = objective(x, grad);
  if (!std::isfinite(f)) throw error("objective is not finite at the starting point");

  SolveResult result;
  result.trace.push_back({0, f, detail::inf_norm(grad), elapsed()});

  std::vector<double> best_x = x;
  double best_f = f;

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  // Normal termination returns the current iterate; a failed line search
  // falls back to the best point seen across all evaluations.
  const auto finish = [&](TerminationReason reason, std::string message = {}) {
    if (reason == TerminationReason::line_search_failure) {
      result.parameters = std::move(best_x);
      result.objective = best_f;
    } else {
      result.parameters = std::move(x);
      result.objective = f;
    }
    result.grad_inf_norm = result.trace.back().grad_inf_norm;
    result.reason = reason;
    result.message = std::move(message);
    return std::move(result);
  };

  double grad_norm = result.trace.back().grad_inf_norm;
  if (grad_norm <= cfg.grad_tol * std::max(1.0, std::abs(f)))
    return finish(TerminationReason::gradient_tolerance);

  for (std::size_t iter = 1; iter <= cfg.max_iterations; ++iter) {
    // Two-loop recursion for d = -H g.
    direction = grad;
    std::vector<double> alpha_tmp(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha_tmp[i] = rho_hist[i] * detail::dot(s_hist[i], direction);
      for (std::size_t j = 0; j < dim; ++j) direction[j] -= alpha_tmp[i] * y_hist[i][j];
    }
    if (!s_hist.empty()) {
      const double gamma = 1.0 / (rho_hist.back() * detail::dot(y_hist.back(), y_hist.back()));
      for (auto& d : direction) d *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * detail::dot(y_hist[i], direction);
      for (std::size_t j = 0; j < dim; ++j)
        direction[j] += s_hist[i][j] * (alpha_tmp[i] - beta);
    }
    for (auto& d : direction) d = -d;

    double dphi0 = detail::dot(grad, direction);
    if (!(dphi0 < 0)) {  // not a descent direction: restart from steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t j = 0; j < dim; ++j) direction[j] = -grad[j];
      dphi0 = -detail::dot(grad, grad);
      if (!(dphi0 < 0)) return finish(TerminationReason::gradient_tolerance);
    }

    // Strong Wolfe line search on phi(a) = f(x + a d).
    const double f0 = f;
    const double c1 = cfg.sufficient_decrease;
    const double c2 = cfg.curvature;
    double last_alpha = -1.0, last_f = 0.0, last_dphi = 0.0;
    const auto eval = [&](double a) {
      for (std::size_t j = 0; j < dim; ++j) x_trial[j] = x[j] + a * direction[j];
      last_f = objective(x_trial, grad_trial);
      last_dphi = detail::dot(grad_trial, direction);
      last_alpha = a;
      if (std::isfinite(last_f) && last_f < best_f) {
        best_f = last_f;
        best_x = x_trial;
      }
    };
    const auto armijo_fail = [&](double a, double fa) {
      return !std::isfinite(fa) || fa > f0 + c1 * a * dphi0;
    };

    double accepted = -1.0;
    std::size_t evals = 0;

    const auto zoom = [&](double lo, double f_lo, double dphi_lo, double hi, double f_hi) {
      while (evals < cfg.max_line_search_evals) {
        // Quadratic interpolation from (lo, f_lo, dphi_lo) and (hi, f_hi),
        // safeguarded toward bisection.
        double a;
        const double span = hi - lo;
        const double denom = 2.0 * (f_hi - f_lo - dphi_lo * span);
        if (std::isfinite(f_hi) && denom != 0.0) {
          a = lo - dphi_lo * span * span / denom;
          const double lo_guard = std::min(lo, hi) + 0.1 * std::abs(span);
          const double hi_guard = std::max(lo, hi) - 0.1 * std::abs(span);
          if (!(a >= lo_guard && a <= hi_guard)) a = lo + 0.5 * span;
        } else {
          a = lo + 0.5 * span;
        }
        eval(a);
        ++evals;
        if (armijo_fail(a, last_f) || last_f >= f_lo) {
          hi = a;
          f_hi = last_f;
        } else {
          if (std::abs(last_dphi) <= -c2 * dphi0) return a;
          if (last_dphi * (hi - lo) >= 0) {
            hi = lo;
            f_hi = f_lo;
          }
          lo = a;
          f_lo = last_f;
          dphi_lo = last_dphi;
        }
        if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
      }
      // Could not satisfy curvature; the lo endpoint still has sufficient
      // decrease, so take it when it moved at all.
      return lo > 0.0 && f_lo < f0 ? lo : -1.0;
    };

    double a_prev = 0.0, f_prev = f0, dphi_prev = dphi0;
    double a = s_hist.empty() ? std::min(1.0, 1.0 / std::max(1.0, grad_norm)) : 1.0;
    while (evals < cfg.max_line_search_evals) {
      eval(a);
      ++evals;
      if (armijo_fail(a, last_f) || (a_prev > 0.0 && last_f >= f_prev)) {
        accepted = zoom(a_prev, f_prev, dphi_prev, a, last_f);
        break;
      }
      if (std::abs(last_dphi) <= -c2 * dphi0) {
        accepted = a;
        break;
      }
      if (last_dphi >= 0) {
        accepted = zoom(a, last_f, last_dphi, a_prev, f_prev);
        break;
      }
      a_prev = a;
      f_prev = last_f;
      dphi_prev = last_dphi;
      if (a >= 1e20) break;
      a = std::min(2.0 * a, 1e20);
    }

    if (accepted <= 0.0)
      return finish(TerminationReason::line_search_failure,
                    "line search could not find an acceptable step at iteration " +
                        std::to_string(iter));
    if (last_alpha != accepted) eval(accepted);

    // Accept the step.
    std::vector<double> s(dim), yv(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      s[j] = x_trial[j] - x[j];
      yv[j] = grad_trial[j] - grad[j];
    }
    x.swap(x_trial);
    grad.swap(grad_trial);
    const double f_old = f;
    f = last_f;

    const double sy = detail::dot(s, yv);
    const double s_norm = std::sqrt(detail::dot(s, s));
    const double y_norm = std::sqrt(detail::dot(yv, yv));
    if (sy > 1e-10 * s_norm * y_norm) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > cfg.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    grad_norm = detail::inf_norm(grad);
    result.trace.push_back({iter, f, grad_norm, elapsed()});

    if (grad_norm <= cfg.grad_tol * std::max(1.0, std::abs(f)))
      return finish(TerminationReason::gradient_tolerance);
    if (std::abs(f_old - f) <= cfg.objective_tol * std::max(1.0, std::abs(f_old)))
      return finish(TerminationReason::objective_tolerance);
  }
  return finish(TerminationReason::max_iterations);
}

}  // namespace dbl
