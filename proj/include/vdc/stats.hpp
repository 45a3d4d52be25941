#ifndef VDC_STATS_HPP
#define VDC_STATS_HPP

#include <functional>

namespace vdc {

double norm_cdf(double x);
double norm_quantile(double p);
double norm_log_pdf(double x);

double t_cdf(double x, double nu);
double t_quantile(double p, double nu);
double t_log_pdf(double x, double nu);

double digamma(double x);

// Adaptive Simpson on [a,b] to absolute tolerance `tol`. Throws NumericError
// if the recursion cannot reach the tolerance within `max_depth` splits.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth = 40,
                        double abs_floor = 0.0);

// Debye function D1(x) = (1/x) * int_0^x t/(e^t - 1) dt, x > 0.
double debye1(double x);

}  // namespace vdc

#endif
