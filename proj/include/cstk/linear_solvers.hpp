#pragma once

#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cstk/errors.hpp"

namespace cstk {

struct SolveStats {
  int iterations = 0;
  double residual_inf = 0.0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline void remove_mean(std::span<double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  s /= static_cast<double>(a.size());
  for (double& v : a) v -= s;
}

/// Diagonal (Jacobi) preconditioner.
inline auto jacobi(std::span<const double> diag) {
  return [diag](std::span<const double> r, std::span<double> z) {
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / diag[i];
  };
}

}  // namespace detail

/// Preconditioned conjugate gradients for a symmetric positive
/// (semi-)definite operator given matrix-free as apply(x, y) : y = A x.
/// precond(r, z) applies an SPD approximate inverse: z = M^-1 r.
///
/// Stops when the true residual satisfies ||b - A x||_inf <= abs_tol.
/// With `singular_constant_mode` the right-hand side and residuals are kept
/// orthogonal to constants (Neumann problems); the caller fixes the gauge of x.
template <class Apply, class Precond>
SolveStats pcg(Apply&& apply, Precond&& precond, std::span<const double> b_in,
               std::span<double> x, double abs_tol, int max_iterations,
               bool singular_constant_mode = false, const char* what = "cg") {
  const std::size_t n = b_in.size();
  std::vector<double> b(b_in.begin(), b_in.end());
  if (singular_constant_mode) detail::remove_mean(b);

  std::vector<double> r(n), z(n), p(n), q(n);
  auto true_residual = [&] {
    apply(std::span<const double>(x), std::span<double>(q));
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    if (singular_constant_mode) detail::remove_mean(r);
  };
  true_residual();
  SolveStats st;
  st.residual_inf = detail::norm_inf(r);
  if (st.residual_inf <= abs_tol) return st;

  precond(std::span<const double>(r), std::span<double>(z));
  p = z;
  double rz = detail::dot(r, z);

  while (st.iterations < max_iterations) {
    apply(std::span<const double>(p), std::span<double>(q));
    const double pq = detail::dot(p, q);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    ++st.iterations;
    if (detail::norm_inf(r) <= abs_tol) {
      // recursive residuals drift; confirm and keep iterating on the true one
      true_residual();
      st.residual_inf = detail::norm_inf(r);
      if (st.residual_inf <= abs_tol) return st;
    }
    precond(std::span<const double>(r), std::span<double>(z));
    const double rz_new = detail::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  true_residual();
  st.residual_inf = detail::norm_inf(r);
  if (st.residual_inf <= abs_tol) return st;
  std::ostringstream msg;
  msg << what << ": no convergence after " << st.iterations << " iterations (residual "
      << st.residual_inf << ", tolerance " << abs_tol << ")";
  throw NoConvergence(msg.str());
}

}  // namespace cstk
