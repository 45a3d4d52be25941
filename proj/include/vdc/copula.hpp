#ifndef VDC_COPULA_HPP
#define VDC_COPULA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace vdc {

enum class Family { Independence, Gaussian, StudentT, Clayton, Gumbel, Frank, Joe };

enum class Rotation { Deg0, Deg90, Deg180, Deg270 };

Family family_from_string(const std::string& s);
std::string family_to_string(Family f);
Rotation rotation_from_degrees(int deg);
int rotation_degrees(Rotation r);

// Parametric description of a synthetic bivariate copula. When
// `mixture_weights` is nonempty the object describes a finite mixture of
// the listed components (family/params are ignored); the rotation applies
// to the mixture as a whole. Nesting depth is limited to 1.
struct CopulaSpec {
  Family family = Family::Independence;
  std::vector<double> params;  // rho | rho,nu | theta
  Rotation rotation = Rotation::Deg0;
  std::vector<double> mixture_weights;
  std::vector<CopulaSpec> mixture_components;

  bool is_mixture() const { return !mixture_weights.empty(); }
};

// Throws std::invalid_argument when the parameter constraints are violated.
void validate_spec(const CopulaSpec& spec);

// Copula density c(u,v) for u,v in (0,1). Families with boundary
// singularities reject u or v in {0,1} with std::domain_error.
double copula_density(const CopulaSpec& spec, double u, double v);
double copula_log_density(const CopulaSpec& spec, double u, double v);

struct UvSample {
  std::vector<double> u, v;
  std::size_t size() const { return u.size(); }
};

// n i.i.d. draws, bit-reproducible for a given seed.
UvSample copula_sample(const CopulaSpec& spec, long long n, std::uint64_t seed);

// Population Kendall tau for non-mixture families (closed forms; Frank via
// Debye-1 quadrature, Joe via the Archimedean generator integral).
double analytic_tau(const CopulaSpec& spec);

// Upper tail dependence lambda_U; requires rotation 0 and no mixture.
double analytic_upper_tail(const CopulaSpec& spec);

// Mutual information -H(c) by adaptive 2-D quadrature of c*log(c) in
// probit-transformed coordinates. Throws NumericError on nonconvergence.
double analytic_mi(const CopulaSpec& spec);

// Average of the copula density over grid cell (a,b) of an m x m grid,
// approximated by a points x points midpoint rule with the evaluation
// points clamped away from the boundary.
double cell_average_density(const CopulaSpec& spec, int m, int a, int b,
                            int points = 8);

nlohmann::json spec_to_json(const CopulaSpec& spec);
CopulaSpec spec_from_json(const nlohmann::json& j);

}  // namespace vdc

#endif
