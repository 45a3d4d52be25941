#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "vdc/copula.hpp"
#include "vdc/errors.hpp"
#include "vdc/kendall.hpp"
#include "vdc/stats.hpp"

using namespace vdc;

namespace {

CopulaSpec make(Family f, std::vector<double> params = {}, int rot = 0) {
  CopulaSpec s;
  s.family = f;
  s.params = std::move(params);
  s.rotation = rotation_from_degrees(rot);
  return s;
}

// O(n^2) concordance count; oracle for the sampled tau.
double brute_tau(const std::vector<double>& u, const std::vector<double>& v,
                 std::size_t n) {
  long long num = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = (u[i] - u[j]) * (v[i] - v[j]);
      num += s > 0 ? 1 : (s < 0 ? -1 : 0);
    }
  return 2.0 * static_cast<double>(num) / (static_cast<double>(n) * (n - 1));
}

double midpoint_mass(const CopulaSpec& s, int m) {
  double acc = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      acc += copula_density(s, (a + 0.5) / m, (b + 0.5) / m);
  return acc / (static_cast<double>(m) * m);
}

}  // namespace

TEST_SUITE("copula") {

TEST_CASE("density closed-form examples") {
  CHECK(copula_density(make(Family::Independence), 0.3, 0.8) == 1.0);

  // Gaussian at the median: 1/sqrt(1-rho^2)
  double c = copula_density(make(Family::Gaussian, {0.7}), 0.5, 0.5);
  CHECK(c == doctest::Approx(1.4002800840280099).epsilon(1e-12));

  CopulaSpec mix;
  mix.mixture_weights = {0.5, 0.5};
  mix.mixture_components = {make(Family::Independence), make(Family::Independence)};
  CHECK(copula_density(mix, 0.2, 0.9) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("density boundary and validation errors") {
  CHECK_THROWS_AS(copula_density(make(Family::Gaussian, {0.7}), 0.0, 0.5),
                  std::domain_error);
  CHECK_THROWS_AS(copula_density(make(Family::Clayton, {2.0}), 0.5, 1.0),
                  std::domain_error);
  CHECK_NOTHROW(copula_density(make(Family::Independence), 0.0, 1.0));

  CHECK_THROWS_AS(validate_spec(make(Family::Gaussian, {1.5})),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_spec(make(Family::StudentT, {0.5, 1.5})),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_spec(make(Family::Clayton, {-1.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_spec(make(Family::Gumbel, {0.8})),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_spec(make(Family::Frank, {0.0})),
                  std::invalid_argument);

  CopulaSpec bad_mix;
  bad_mix.mixture_weights = {0.6, 0.6};
  bad_mix.mixture_components = {make(Family::Independence),
                                make(Family::Independence)};
  CHECK_THROWS_AS(validate_spec(bad_mix), std::invalid_argument);

  CopulaSpec inner;
  inner.mixture_weights = {0.5, 0.5};
  inner.mixture_components = {make(Family::Independence),
                              make(Family::Independence)};
  CopulaSpec nested;
  nested.mixture_weights = {1.0};
  nested.mixture_components = {inner};
  CHECK_THROWS_AS(validate_spec(nested), std::invalid_argument);
}

TEST_CASE("sampled tau matches analytic values") {
  auto sample_tau = [](const CopulaSpec& s) {
    UvSample uv = copula_sample(s, 100000, 42);
    return kendall_tau(uv.u, uv.v);
  };
  CHECK(std::abs(sample_tau(make(Family::Independence))) < 0.01);
  CHECK(std::abs(sample_tau(make(Family::Clayton, {3.0})) - 0.6) < 0.01);
  CHECK(std::abs(sample_tau(make(Family::Gumbel, {2.5})) - 0.6) < 0.01);
  CHECK(std::abs(sample_tau(make(Family::Frank, {5.0})) -
                 analytic_tau(make(Family::Frank, {5.0}))) < 0.01);
  CHECK(std::abs(sample_tau(make(Family::Joe, {3.0})) -
                 analytic_tau(make(Family::Joe, {3.0}))) < 0.01);
  CHECK(std::abs(sample_tau(make(Family::StudentT, {0.5, 4.0})) -
                 2.0 / M_PI * std::asin(0.5)) < 0.01);

  // cross-check the fast tau against a brute-force concordance count
  UvSample uv = copula_sample(make(Family::Clayton, {3.0}), 2000, 7);
  double fast = kendall_tau(uv.u, uv.v);
  CHECK(fast == doctest::Approx(brute_tau(uv.u, uv.v, 2000)).epsilon(1e-12));
}

TEST_CASE("gaussian sampler hits the latent correlation") {
  UvSample uv = copula_sample(make(Family::Gaussian, {0.7}), 100000, 3);
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const double n = static_cast<double>(uv.size());
  for (std::size_t i = 0; i < uv.size(); ++i) {
    double x = norm_quantile(uv.u[i]), y = norm_quantile(uv.v[i]);
    sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
  }
  double corr = (sxy - sx * sy / n) /
                std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
  CHECK(std::abs(corr - 0.7) < 0.01);
}

TEST_CASE("sampler determinism and range") {
  CopulaSpec s = make(Family::Gumbel, {2.0}, 90);
  UvSample a = copula_sample(s, 2000, 123);
  UvSample b = copula_sample(s, 2000, 123);
  CHECK(a.u == b.u);
  CHECK(a.v == b.v);
  UvSample c = copula_sample(s, 2000, 124);
  CHECK(a.u != c.u);
  bool in_range = true;
  for (std::size_t i = 0; i < a.size(); ++i)
    in_range = in_range && a.u[i] > 0.0 && a.u[i] < 1.0 && a.v[i] > 0.0 &&
               a.v[i] < 1.0;
  CHECK(in_range);
}

TEST_CASE("analytic tau closed forms and rotations") {
  CHECK(analytic_tau(make(Family::Gaussian, {0.0})) == 0.0);
  CHECK(analytic_tau(make(Family::Clayton, {3.0})) ==
        doctest::Approx(0.6).epsilon(1e-14));
  CHECK(analytic_tau(make(Family::Gumbel, {2.5})) ==
        doctest::Approx(0.6).epsilon(1e-14));
  CHECK(analytic_tau(make(Family::Frank, {5.0})) ==
        doctest::Approx(0.4567010).epsilon(1e-5));
  CHECK(analytic_tau(make(Family::Frank, {-5.0})) ==
        doctest::Approx(-0.4567010).epsilon(1e-5));
  // Joe series: tau = 1 - 4 sum_k 1/(k(theta k+2)(theta(k-1)+2))
  double series = 0.0;
  for (int k = 1; k <= 2000000; ++k)
    series += 1.0 / (static_cast<double>(k) * (3.0 * k + 2.0) * (3.0 * k - 1.0));
  CHECK(analytic_tau(make(Family::Joe, {3.0})) ==
        doctest::Approx(1.0 - 4.0 * series).epsilon(1e-6));

  CHECK(analytic_tau(make(Family::Clayton, {3.0}, 90)) ==
        doctest::Approx(-0.6).epsilon(1e-14));
  CHECK(analytic_tau(make(Family::Clayton, {3.0}, 180)) ==
        doctest::Approx(0.6).epsilon(1e-14));
  CHECK(analytic_tau(make(Family::Clayton, {3.0}, 270)) ==
        doctest::Approx(-0.6).epsilon(1e-14));

  CopulaSpec mix;
  mix.mixture_weights = {0.5, 0.5};
  mix.mixture_components = {make(Family::Independence), make(Family::Independence)};
  CHECK_THROWS_AS(analytic_tau(mix), std::invalid_argument);
}

TEST_CASE("upper tail dependence") {
  CHECK(analytic_upper_tail(make(Family::Gaussian, {0.7})) == 0.0);
  CHECK(analytic_upper_tail(make(Family::Clayton, {3.0})) == 0.0);
  CHECK(analytic_upper_tail(make(Family::Frank, {5.0})) == 0.0);
  CHECK(analytic_upper_tail(make(Family::Gumbel, {2.5})) ==
        doctest::Approx(2.0 - std::pow(2.0, 0.4)).epsilon(1e-14));
  CHECK(analytic_upper_tail(make(Family::Joe, {2.0})) ==
        doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(analytic_upper_tail(make(Family::Gumbel, {2.5}, 90)),
                  std::invalid_argument);

  // numeric-limit oracles: empirical conditional exceedance at q -> 1
  auto tail_at = [](const CopulaSpec& s, double q) {
    UvSample uv = copula_sample(s, 2000000, 5);
    long long cnt = 0;
    for (std::size_t i = 0; i < uv.size(); ++i)
      if (uv.u[i] > q && uv.v[i] > q) ++cnt;
    return static_cast<double>(cnt) / (static_cast<double>(uv.size()) * (1 - q));
  };
  // Gaussian: tail-independent, estimate decays toward 0 (the decay is
  // polynomial with exponent (1-rho)/(1+rho), so rho=0.3 is nearly there
  // at q=0.999 while rho=0.7 only shows the trend)
  CHECK(tail_at(make(Family::Gaussian, {0.7}), 0.999) <
        tail_at(make(Family::Gaussian, {0.7}), 0.99));
  CHECK(tail_at(make(Family::Gaussian, {0.3}), 0.999) < 0.1);
  // Gumbel and StudentT: estimate approaches the closed form
  CHECK(std::abs(tail_at(make(Family::Gumbel, {2.5}), 0.999) -
                 analytic_upper_tail(make(Family::Gumbel, {2.5}))) < 0.03);
  CHECK(std::abs(tail_at(make(Family::StudentT, {0.5, 4.0}), 0.999) -
                 analytic_upper_tail(make(Family::StudentT, {0.5, 4.0}))) < 0.03);
}

TEST_CASE("analytic MI via quadrature") {
  CHECK(analytic_mi(make(Family::Independence)) ==
        doctest::Approx(0.0).epsilon(1e-9));
  CHECK(analytic_mi(make(Family::Gaussian, {0.7})) ==
        doctest::Approx(0.33667228).epsilon(1e-4));
  CHECK(analytic_mi(make(Family::Gaussian, {0.5})) ==
        doctest::Approx(0.14384104).epsilon(1e-4));
  CHECK(analytic_mi(make(Family::Gaussian, {0.3})) ==
        doctest::Approx(-0.5 * std::log1p(-0.09)).epsilon(1e-4));
  for (auto spec : {make(Family::Clayton, {2.0}), make(Family::Gumbel, {2.0}),
                    make(Family::Frank, {4.0}), make(Family::StudentT, {0.5, 4.0})})
    CHECK(analytic_mi(spec) > 0.01);
  CHECK(analytic_mi(make(Family::Clayton, {2.0}, 90)) ==
        doctest::Approx(analytic_mi(make(Family::Clayton, {2.0}))).epsilon(1e-6));
  CopulaSpec mix;
  mix.mixture_weights = {0.5, 0.5};
  mix.mixture_components = {make(Family::Gaussian, {0.6}),
                            make(Family::Independence)};
  double mi = analytic_mi(mix);
  CHECK(mi > 0.0);
  CHECK(mi < analytic_mi(make(Family::Gaussian, {0.6})));
}

TEST_CASE("density integrates to one (midpoint 512)") {
  CHECK(std::abs(midpoint_mass(make(Family::Independence), 512) - 1) < 1e-12);
  CHECK(std::abs(midpoint_mass(make(Family::Gaussian, {0.7}), 512) - 1) < 1e-3);
  CHECK(std::abs(midpoint_mass(make(Family::StudentT, {0.5, 4.0}), 512) - 1) < 1e-3);
  CHECK(std::abs(midpoint_mass(make(Family::Clayton, {2.0}), 512) - 1) < 1e-3);
  CHECK(std::abs(midpoint_mass(make(Family::Gumbel, {2.5}), 512) - 1) < 1e-3);
  CHECK(std::abs(midpoint_mass(make(Family::Frank, {5.0}), 512) - 1) < 1e-3);
  CHECK(std::abs(midpoint_mass(make(Family::Joe, {3.0}), 512) - 1) < 1e-3);
}

TEST_CASE("rotation identities") {
  CopulaSpec base = make(Family::Clayton, {2.5});
  CopulaSpec r180 = make(Family::Clayton, {2.5}, 180);
  for (double u : {0.1, 0.4, 0.73})
    for (double v : {0.2, 0.55, 0.9})
      CHECK(copula_density(r180, u, v) == copula_density(base, 1 - u, 1 - v));

  // 90-degree rotation flips the sign of tau
  UvSample uv = copula_sample(make(Family::Clayton, {2.5}, 90), 50000, 9);
  CHECK(std::abs(kendall_tau(uv.u, uv.v) + analytic_tau(base)) < 0.02);

  // rotated draws are the coordinate-mapped base draws (same seed)
  UvSample b = copula_sample(base, 1000, 11);
  UvSample r = copula_sample(make(Family::Clayton, {2.5}, 90), 1000, 11);
  bool mapped = true;
  for (std::size_t i = 0; i < 1000; ++i)
    mapped = mapped && r.u[i] == b.v[i] && r.v[i] == 1.0 - b.u[i];
  CHECK(mapped);
}

TEST_CASE("spec JSON round trip") {
  CopulaSpec mix;
  mix.rotation = Rotation::Deg270;
  mix.mixture_weights = {0.25, 0.75};
  mix.mixture_components = {make(Family::Gaussian, {0.6}),
                            make(Family::Clayton, {2.0}, 180)};
  nlohmann::json j = spec_to_json(mix);
  CopulaSpec back = spec_from_json(j);
  CHECK(back.rotation == Rotation::Deg270);
  CHECK(back.mixture_weights == mix.mixture_weights);
  CHECK(back.mixture_components[1].family == Family::Clayton);
  CHECK(back.mixture_components[1].rotation == Rotation::Deg180);
  CHECK(spec_to_json(back) == j);

  CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"family", "nonsense"}}),
                  std::invalid_argument);
}

}  // TEST_SUITE
