#include "vdc/copula.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "vdc/errors.hpp"
#include "vdc/rng.hpp"
#include "vdc/stats.hpp"

namespace vdc {

namespace {

constexpr double kClamp = 1e-12;  // quadrature-only boundary clamp

double get_rho(const CopulaSpec& s) { return s.params.at(0); }
double get_nu(const CopulaSpec& s) { return s.params.at(1); }
double get_theta(const CopulaSpec& s) { return s.params.at(0); }

bool boundary(double x) { return x <= 0.0 || x >= 1.0; }

void check_unit_open(double u, double v, Family f) {
  if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0)
    throw std::domain_error("copula_density: coordinates must lie in [0,1]");
  if (f != Family::Independence && (boundary(u) || boundary(v)))
    throw std::domain_error(
        "copula_density: boundary evaluation undefined for family " +
        family_to_string(f));
}

// --- per-family log densities (rotation handled by the caller) ---

double log_density_gaussian(double rho, double u, double v) {
  double x = norm_quantile(u), y = norm_quantile(v);
  double r2 = rho * rho;
  return -0.5 * std::log1p(-r2) -
         (r2 * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * (1.0 - r2));
}

double log_density_student_t(double rho, double nu, double u, double v) {
  double x = t_quantile(u, nu), y = t_quantile(v, nu);
  double r2 = rho * rho;
  double quad = (x * x - 2.0 * rho * x * y + y * y) / (nu * (1.0 - r2));
  double log_f2 = std::lgamma(0.5 * (nu + 2.0)) - std::lgamma(0.5 * nu) -
                  std::log(nu * M_PI) - 0.5 * std::log1p(-r2) -
                  0.5 * (nu + 2.0) * std::log1p(quad);
  return log_f2 - t_log_pdf(x, nu) - t_log_pdf(y, nu);
}

double log_density_clayton(double theta, double u, double v) {
  // log(1+theta) - (1+theta)(log u + log v) - (2 + 1/theta) log(u^-t + v^-t - 1)
  double a = -theta * std::log(u), b = -theta * std::log(v);
  double hi = std::max(a, b);
  double lse = hi + std::log(std::exp(a - hi) + std::exp(b - hi) - std::exp(-hi));
  return std::log1p(theta) + (1.0 + theta) * ((a + b) / theta) -
         (2.0 + 1.0 / theta) * lse;
}

double log_density_gumbel(double theta, double u, double v) {
  double a = -std::log1p(u - 1.0), b = -std::log1p(v - 1.0);  // -log u, -log v
  double la = std::log(a), lb = std::log(b);
  double big_s = std::exp(theta * la) + std::exp(theta * lb);
  double s = std::pow(big_s, 1.0 / theta);
  return -s + (a + b) + (2.0 / theta - 2.0) * std::log(big_s) +
         (theta - 1.0) * (la + lb) + std::log1p((theta - 1.0) / s);
}

double log_density_frank(double theta, double u, double v) {
  double den = -std::expm1(-theta) - std::expm1(-theta * u) * std::expm1(-theta * v);
  return std::log(theta * (-std::expm1(-theta))) - theta * (u + v) -
         2.0 * std::log(std::abs(den));
}

double log_density_joe(double theta, double u, double v) {
  double lu = std::log1p(-u), lv = std::log1p(-v);  // log(1-u), log(1-v)
  double ubar = std::exp(theta * lu), vbar = std::exp(theta * lv);
  double s = ubar + vbar - ubar * vbar;
  return (1.0 / theta - 2.0) * std::log(s) + (theta - 1.0) * (lu + lv) +
         std::log((theta - 1.0) * (1.0 - ubar) * (1.0 - vbar) + theta * s);
}

double base_log_density(const CopulaSpec& s, double u, double v) {
  switch (s.family) {
    case Family::Independence: return 0.0;
    case Family::Gaussian: return log_density_gaussian(get_rho(s), u, v);
    case Family::StudentT: return log_density_student_t(get_rho(s), get_nu(s), u, v);
    case Family::Clayton: return log_density_clayton(get_theta(s), u, v);
    case Family::Gumbel: return log_density_gumbel(get_theta(s), u, v);
    case Family::Frank: return log_density_frank(get_theta(s), u, v);
    case Family::Joe: return log_density_joe(get_theta(s), u, v);
  }
  throw std::invalid_argument("unknown family");
}

// Map evaluation coordinates back to the base copula's frame.
void unrotate(Rotation r, double& u, double& v) {
  double uu = u, vv = v;
  switch (r) {
    case Rotation::Deg0: break;
    case Rotation::Deg90: u = 1.0 - vv; v = uu; break;
    case Rotation::Deg180: u = 1.0 - uu; v = 1.0 - vv; break;
    case Rotation::Deg270: u = vv; v = 1.0 - uu; break;
  }
}

// Map a sample drawn from the base copula into the rotated frame.
void rotate_sample(Rotation r, double& u, double& v) {
  double uu = u, vv = v;
  switch (r) {
    case Rotation::Deg0: break;
    case Rotation::Deg90: u = vv; v = 1.0 - uu; break;
    case Rotation::Deg180: u = 1.0 - uu; v = 1.0 - vv; break;
    case Rotation::Deg270: u = 1.0 - vv; v = uu; break;
  }
}

double clamp_unit(double x) {
  return std::min(std::max(x, 1e-15), 1.0 - 1e-15);
}

// Conditional CDF dC(u,v)/du for the conditional-inversion samplers.
double frank_h(double theta, double u, double v) {
  double num = std::exp(-theta * u) * std::expm1(-theta * v);
  double den = std::expm1(-theta) + std::expm1(-theta * u) * std::expm1(-theta * v);
  return num / den;
}

double joe_h(double theta, double u, double v) {
  double lu = std::log1p(-u), lv = std::log1p(-v);
  double ubar = std::exp(theta * lu), vbar = std::exp(theta * lv);
  double s = ubar + vbar - ubar * vbar;
  return std::pow(s, 1.0 / theta - 1.0) * std::exp((theta - 1.0) * lu) *
         (1.0 - vbar);
}

// Solve h(v|u) = w for v by bisection; h must be increasing in v.
template <class H>
double invert_conditional(const H& h, double w, double tol = 1e-12) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (h(mid) < w)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// One-sided positive stable variate with Laplace transform exp(-t^alpha),
// Chambers-Mallows-Stuck construction.
double positive_stable(Rng& rng, double alpha) {
  double theta = M_PI * rng.uniform();
  double e = rng.exponential();
  double s = std::sin(alpha * theta) / std::pow(std::sin(theta), 1.0 / alpha);
  return s * std::pow(std::sin((1.0 - alpha) * theta) / e, (1.0 - alpha) / alpha);
}

void base_draw(const CopulaSpec& s, Rng& rng, double& u, double& v) {
  switch (s.family) {
    case Family::Independence: {
      u = rng.uniform();
      v = rng.uniform();
      return;
    }
    case Family::Gaussian: {
      double rho = get_rho(s);
      double z1 = rng.normal();
      double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * rng.normal();
      u = clamp_unit(norm_cdf(z1));
      v = clamp_unit(norm_cdf(z2));
      return;
    }
    case Family::StudentT: {
      double rho = get_rho(s), nu = get_nu(s);
      double z1 = rng.normal();
      double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * rng.normal();
      double scale = std::sqrt(nu / rng.chi_squared(nu));
      u = clamp_unit(t_cdf(z1 * scale, nu));
      v = clamp_unit(t_cdf(z2 * scale, nu));
      return;
    }
    case Family::Clayton: {  // Marshall-Olkin with Gamma(1/theta) frailty
      double theta = get_theta(s);
      double w = rng.gamma(1.0 / theta);
      double e1 = rng.exponential(), e2 = rng.exponential();
      u = clamp_unit(std::pow(1.0 + e1 / w, -1.0 / theta));
      v = clamp_unit(std::pow(1.0 + e2 / w, -1.0 / theta));
      return;
    }
    case Family::Gumbel: {  // positive-stable frailty
      double theta = get_theta(s);
      if (theta < 1.0 + 1e-12) {
        u = rng.uniform();
        v = rng.uniform();
        return;
      }
      double st = positive_stable(rng, 1.0 / theta);
      double e1 = rng.exponential(), e2 = rng.exponential();
      u = clamp_unit(std::exp(-std::pow(e1 / st, 1.0 / theta)));
      v = clamp_unit(std::exp(-std::pow(e2 / st, 1.0 / theta)));
      return;
    }
    case Family::Frank: {
      double theta = get_theta(s);
      u = rng.uniform();
      double w = rng.uniform();
      double uu = u;
      v = invert_conditional(
          [theta, uu](double vv) { return frank_h(theta, uu, vv); }, w);
      v = clamp_unit(v);
      return;
    }
    case Family::Joe: {
      double theta = get_theta(s);
      u = rng.uniform();
      double w = rng.uniform();
      double uu = u;
      v = invert_conditional(
          [theta, uu](double vv) { return joe_h(theta, uu, vv); }, w);
      v = clamp_unit(v);
      return;
    }
  }
  throw std::invalid_argument("unknown family");
}

void validate_non_mixture(const CopulaSpec& s) {
  switch (s.family) {
    case Family::Independence:
      break;
    case Family::Gaussian: {
      if (s.params.size() != 1)
        throw std::invalid_argument("Gaussian expects params = [rho]");
      double rho = s.params[0];
      if (!(rho > -1.0 && rho < 1.0))
        throw std::invalid_argument("Gaussian: rho must lie in (-1,1)");
      break;
    }
    case Family::StudentT: {
      if (s.params.size() != 2)
        throw std::invalid_argument("StudentT expects params = [rho, nu]");
      double rho = s.params[0], nu = s.params[1];
      if (!(rho > -1.0 && rho < 1.0))
        throw std::invalid_argument("StudentT: rho must lie in (-1,1)");
      if (!(nu > 2.0)) throw std::invalid_argument("StudentT: nu must be > 2");
      break;
    }
    case Family::Clayton:
      if (s.params.size() != 1 || !(s.params[0] > 0.0))
        throw std::invalid_argument("Clayton: theta must be > 0");
      break;
    case Family::Gumbel:
      if (s.params.size() != 1 || !(s.params[0] >= 1.0))
        throw std::invalid_argument("Gumbel: theta must be >= 1");
      break;
    case Family::Joe:
      if (s.params.size() != 1 || !(s.params[0] >= 1.0))
        throw std::invalid_argument("Joe: theta must be >= 1");
      break;
    case Family::Frank:
      if (s.params.size() != 1 || s.params[0] == 0.0)
        throw std::invalid_argument("Frank: theta must be nonzero");
      break;
  }
}

}  // namespace

Family family_from_string(const std::string& s) {
  if (s == "independence") return Family::Independence;
  if (s == "gaussian") return Family::Gaussian;
  if (s == "studentt" || s == "student_t") return Family::StudentT;
  if (s == "clayton") return Family::Clayton;
  if (s == "gumbel") return Family::Gumbel;
  if (s == "frank") return Family::Frank;
  if (s == "joe") return Family::Joe;
  throw std::invalid_argument("unknown copula family: " + s);
}

std::string family_to_string(Family f) {
  switch (f) {
    case Family::Independence: return "independence";
    case Family::Gaussian: return "gaussian";
    case Family::StudentT: return "studentt";
    case Family::Clayton: return "clayton";
    case Family::Gumbel: return "gumbel";
    case Family::Frank: return "frank";
    case Family::Joe: return "joe";
  }
  return "?";
}

Rotation rotation_from_degrees(int deg) {
  switch (deg) {
    case 0: return Rotation::Deg0;
    case 90: return Rotation::Deg90;
    case 180: return Rotation::Deg180;
    case 270: return Rotation::Deg270;
  }
  throw std::invalid_argument("rotation must be one of 0/90/180/270");
}

int rotation_degrees(Rotation r) {
  switch (r) {
    case Rotation::Deg0: return 0;
    case Rotation::Deg90: return 90;
    case Rotation::Deg180: return 180;
    case Rotation::Deg270: return 270;
  }
  return 0;
}

void validate_spec(const CopulaSpec& spec) {
  if (!spec.is_mixture()) {
    validate_non_mixture(spec);
    return;
  }
  if (spec.mixture_weights.size() != spec.mixture_components.size())
    throw std::invalid_argument("mixture: weights and components differ in length");
  double total = 0.0;
  for (double w : spec.mixture_weights) {
    if (!(w > 0.0))
      throw std::invalid_argument("mixture: weights must be strictly positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("mixture: weights must sum to 1 within 1e-12");
  for (const auto& c : spec.mixture_components) {
    if (c.is_mixture())
      throw std::invalid_argument("mixture: nesting depth exceeds 1");
    validate_non_mixture(c);
  }
}

double copula_log_density(const CopulaSpec& spec, double u, double v) {
  return std::log(copula_density(spec, u, v));
}

double copula_density(const CopulaSpec& spec, double u, double v) {
  validate_spec(spec);
  unrotate(spec.rotation, u, v);
  if (!spec.is_mixture()) {
    check_unit_open(u, v, spec.family);
    return std::exp(base_log_density(spec, u, v));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < spec.mixture_weights.size(); ++i) {
    const auto& c = spec.mixture_components[i];
    check_unit_open(u, v, c.family);
    acc += spec.mixture_weights[i] * std::exp(base_log_density(c, u, v));
  }
  return acc;
}

UvSample copula_sample(const CopulaSpec& spec, long long n, std::uint64_t seed) {
  validate_spec(spec);
  if (n < 1) throw std::invalid_argument("copula_sample: n must be >= 1");
  Rng rng(seed);
  UvSample out;
  out.u.resize(static_cast<std::size_t>(n));
  out.v.resize(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    double u, v;
    if (spec.is_mixture()) {
      double pick = rng.uniform(), acc = 0.0;
      std::size_t idx = spec.mixture_weights.size() - 1;
      for (std::size_t c = 0; c < spec.mixture_weights.size(); ++c) {
        acc += spec.mixture_weights[c];
        if (pick <= acc) {
          idx = c;
          break;
        }
      }
      base_draw(spec.mixture_components[idx], rng, u, v);
    } else {
      base_draw(spec, rng, u, v);
    }
    rotate_sample(spec.rotation, u, v);
    out.u[static_cast<std::size_t>(i)] = u;
    out.v[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

double analytic_tau(const CopulaSpec& spec) {
  validate_spec(spec);
  if (spec.is_mixture())
    throw std::invalid_argument(
        "analytic_tau: mixtures have no closed form; use Monte Carlo");
  double tau = 0.0;
  switch (spec.family) {
    case Family::Independence:
      tau = 0.0;
      break;
    case Family::Gaussian:
    case Family::StudentT:
      tau = 2.0 / M_PI * std::asin(get_rho(spec));
      break;
    case Family::Clayton: {
      double th = get_theta(spec);
      tau = th / (th + 2.0);
      break;
    }
    case Family::Gumbel:
      tau = 1.0 - 1.0 / get_theta(spec);
      break;
    case Family::Frank: {
      double th = std::abs(get_theta(spec));
      tau = 1.0 - 4.0 / th * (1.0 - debye1(th));
      if (get_theta(spec) < 0.0) tau = -tau;
      break;
    }
    case Family::Joe: {
      // tau = 1 + 4 int phi/phi' with generator phi(t) = -log(1-(1-t)^theta)
      double th = get_theta(spec);
      if (th < 1.0 + 1e-12) {
        tau = 0.0;
        break;
      }
      auto integrand = [th](double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        double g = -std::expm1(th * std::log1p(-t));  // 1-(1-t)^theta
        return std::log(g) * g * std::pow(1.0 - t, 1.0 - th) / th;
      };
      tau = 1.0 + 4.0 * adaptive_simpson(integrand, 0.0, 1.0, 1e-10);
      break;
    }
  }
  if (spec.rotation == Rotation::Deg90 || spec.rotation == Rotation::Deg270)
    tau = -tau;
  return tau;
}

double analytic_upper_tail(const CopulaSpec& spec) {
  validate_spec(spec);
  if (spec.is_mixture() || spec.rotation != Rotation::Deg0)
    throw std::invalid_argument(
        "analytic_upper_tail: requires a non-mixture spec with rotation 0");
  switch (spec.family) {
    case Family::Independence:
    case Family::Gaussian:
    case Family::Clayton:
    case Family::Frank:
      return 0.0;
    case Family::Gumbel:
    case Family::Joe:
      return 2.0 - std::pow(2.0, 1.0 / get_theta(spec));
    case Family::StudentT: {
      double rho = get_rho(spec), nu = get_nu(spec);
      double arg = -std::sqrt((nu + 1.0) * (1.0 - rho) / (1.0 + rho));
      return 2.0 * t_cdf(arg, nu + 1.0);
    }
  }
  return 0.0;
}

double analytic_mi(const CopulaSpec& spec) {
  validate_spec(spec);
  // Probit substitution u = Phi(x), v = Phi(y) concentrates the integrand and
  // removes the boundary; the integrand decays like exp(-x^2/2) times a
  // subexponential factor for every supported family.
  const double lim = 8.25;
  auto integrand_y = [&spec](double x, double y) {
    double u = norm_cdf(x), v = norm_cdf(y);
    u = std::min(std::max(u, kClamp), 1.0 - kClamp);
    v = std::min(std::max(v, kClamp), 1.0 - kClamp);
    double c = copula_density(spec, u, v);
    if (c <= 0.0) return 0.0;
    return c * std::log(c) * std::exp(norm_log_pdf(x) + norm_log_pdf(y));
  };
  try {
    auto outer = [&](double x) {
      return adaptive_simpson([&](double y) { return integrand_y(x, y); },
                              -lim, lim, 1e-11, 44);
    };
    // the outer floor absorbs the inner quadrature's residual noise
    return adaptive_simpson(outer, -lim, lim, 1e-8, 44, 5e-11);
  } catch (const NumericError& e) {
    throw NumericError(std::string("analytic_mi: quadrature did not converge (") +
                       e.what() + ")");
  }
}

double cell_average_density(const CopulaSpec& spec, int m, int a, int b,
                            int points) {
  double delta = 1.0 / m;
  double acc = 0.0;
  for (int i = 0; i < points; ++i) {
    double u = (a + (i + 0.5) / points) * delta;
    u = std::min(std::max(u, kClamp), 1.0 - kClamp);
    for (int j = 0; j < points; ++j) {
      double v = (b + (j + 0.5) / points) * delta;
      v = std::min(std::max(v, kClamp), 1.0 - kClamp);
      acc += copula_density(spec, u, v);
    }
  }
  return acc / (static_cast<double>(points) * points);
}

nlohmann::json spec_to_json(const CopulaSpec& spec) {
  nlohmann::json j;
  j["family"] = family_to_string(spec.family);
  j["params"] = spec.params;
  j["rotation"] = rotation_degrees(spec.rotation);
  if (spec.is_mixture()) {
    nlohmann::json mix = nlohmann::json::array();
    for (std::size_t i = 0; i < spec.mixture_weights.size(); ++i) {
      mix.push_back({{"weight", spec.mixture_weights[i]},
                     {"spec", spec_to_json(spec.mixture_components[i])}});
    }
    j["mixture"] = mix;
  }
  return j;
}

CopulaSpec spec_from_json(const nlohmann::json& j) {
  CopulaSpec s;
  if (j.contains("family")) s.family = family_from_string(j.at("family"));
  if (j.contains("params")) s.params = j.at("params").get<std::vector<double>>();
  if (j.contains("rotation")) s.rotation = rotation_from_degrees(j.at("rotation"));
  if (j.contains("mixture")) {
    for (const auto& c : j.at("mixture")) {
      s.mixture_weights.push_back(c.at("weight").get<double>());
      s.mixture_components.push_back(spec_from_json(c.at("spec")));
    }
  }
  validate_spec(s);
  return s;
}

}  // namespace vdc
