#pragma once

#include "iedd/common.hpp"

#include <cmath>
#include <functional>

namespace iedd::quad {

namespace detail {

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kronrod_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_w = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_w = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double value;
  double error;
};

inline Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), r = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kronrod_w[7];
  double g = fc * gauss_w[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = r * kronrod_x[static_cast<std::size_t>(i)];
    const double s = f(c - dx) + f(c + dx);
    k += kronrod_w[static_cast<std::size_t>(i)] * s;
    if (i % 2 == 1) g += gauss_w[static_cast<std::size_t>(i / 2)] * s;
  }
  return {k * r, std::abs((k - g) * r)};
}

inline double adapt(const std::function<double(double)>& f, double a, double b, double whole,
                    double err, double tol, int depth, int& evaluations) {
  if (err <= tol || depth <= 0) {
    if (err > tol) evaluations = -1;  // flag non-convergence
    return whole;
  }
  const double m = 0.5 * (a + b);
  const Panel left = gk15(f, a, m), right = gk15(f, m, b);
  evaluations += 30;
  return adapt(f, a, m, left.value, left.error, 0.5 * tol, depth - 1, evaluations) +
         adapt(f, m, b, right.value, right.error, 0.5 * tol, depth - 1, evaluations);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of a smooth function on [a, b] to an
/// absolute tolerance. Throws NumericalError when the bisection depth runs out.
inline double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                        int max_depth = 40) {
  const detail::Panel p = detail::gk15(f, a, b);
  int evaluations = 15;
  const double v = detail::adapt(f, a, b, p.value, p.error, abs_tol, max_depth, evaluations);
  if (evaluations < 0) throw NumericalError("adaptive quadrature did not reach the requested tolerance");
  return v;
}

}  // namespace iedd::quad
