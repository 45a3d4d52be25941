#include "vdc/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>

#include "vdc/errors.hpp"

namespace vdc {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kLogSqrt2Pi = 0.9189385332046727;
}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("norm_quantile: p must lie in (0,1)");
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

double norm_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double t_cdf(double x, double nu) {
  boost::math::students_t dist(nu);
  return boost::math::cdf(dist, x);
}

double t_quantile(double p, double nu) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("t_quantile: p must lie in (0,1)");
  boost::math::students_t dist(nu);
  return boost::math::quantile(dist, p);
}

double t_log_pdf(double x, double nu) {
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * M_PI) -
         0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

double digamma(double x) { return boost::math::digamma(x); }

namespace {

double simpson_rule(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a,
                     double fa, double b, double fb, double m, double fm,
                     double whole, double tol, double abs_floor, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson_rule(a, fa, m, fm, flm);
  double right = simpson_rule(m, fm, b, fb, frm);
  double err = left + right - whole;
  // the floor keeps the halved tolerance from chasing integrand noise
  // (roundoff, or the residual of a nested inner quadrature)
  double tol_eff = std::max(
      tol, std::max(abs_floor,
                    4e-16 * (std::abs(left) + std::abs(right)) + 1e-300));
  if (std::abs(err) <= 15.0 * tol_eff) return left + right + err / 15.0;
  if (depth <= 0)
    throw NumericError("adaptive_simpson: tolerance not reached (residual " +
                       std::to_string(std::abs(err) / 15.0) + " on [" +
                       std::to_string(a) + "," + std::to_string(b) + "])");
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, abs_floor,
                       depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, abs_floor,
                       depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth,
                        double abs_floor) {
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = simpson_rule(a, fa, b, fb, fm);
  return adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, abs_floor, max_depth);
}

double debye1(double x) {
  if (!(x > 0.0)) throw std::domain_error("debye1: x must be > 0");
  auto integrand = [](double t) {
    if (t < 1e-8) return 1.0 - 0.5 * t;  // t/(e^t-1) around t = 0
    return t / std::expm1(t);
  };
  return adaptive_simpson(integrand, 0.0, x, 1e-10) / x;
}

}  // namespace vdc
