#include "vdc/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "vdc/errors.hpp"
#include "vdc/rng.hpp"

namespace vdc {

double GridBuffer::total_mass() const {
  double s = 0.0;
  for (double x : values) s += x;
  return s * delta() * delta();
}

CorruptVariant corrupt_variant_from_string(const std::string& s) {
  if (s == "direct") return CorruptVariant::Direct;
  if (s == "uniform-mix" || s == "uniformmix") return CorruptVariant::UniformMix;
  if (s == "gaussian") return CorruptVariant::Gaussian;
  if (s == "multinomial") return CorruptVariant::Multinomial;
  throw std::invalid_argument("unknown corruption variant: " + s);
}

std::vector<double> rank_pit(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw std::invalid_argument("rank_pit: empty input");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("rank_pit: non-finite value");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> out(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    // midrank of the tie group [i, j], 1-based ranks
    double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t) out[order[t]] = rank / (n + 1.0);
    i = j + 1;
  }
  return out;
}

PseudoObs pseudo_observations(std::span<const double> x,
                              std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("pseudo_observations: length mismatch");
  PseudoObs obs;
  obs.u = rank_pit(x);
  obs.v = rank_pit(y);
  obs.n = static_cast<long long>(x.size());
  return obs;
}

Histogram histogram(const PseudoObs& obs, int m) {
  if (m < 2) throw std::invalid_argument("histogram: grid size must be >= 2");
  if (obs.n < 1 || obs.u.size() != obs.v.size() ||
      static_cast<long long>(obs.u.size()) != obs.n)
    throw std::invalid_argument("histogram: invalid pseudo-observations");
  Histogram h;
  h.m = m;
  h.n = obs.n;
  h.values.assign(static_cast<std::size_t>(m) * m, 0.0);
  const double scale = 1.0 / (static_cast<double>(obs.n) * h.delta() * h.delta());
  for (std::size_t i = 0; i < obs.u.size(); ++i) {
    double u = obs.u[i], v = obs.v[i];
    if (!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0))
      throw std::invalid_argument("histogram: coordinates must lie in (0,1)");
    int a = std::min(static_cast<int>(u * m), m - 1);
    int b = std::min(static_cast<int>(v * m), m - 1);
    h.at(a, b) += scale;
  }
  return h;
}

Histogram corrupt(const Histogram& h, CorruptVariant variant, double level,
                  std::uint64_t seed) {
  Histogram out = h;
  switch (variant) {
    case CorruptVariant::Direct:
      return out;
    case CorruptVariant::UniformMix: {
      if (!(level >= 0.0 && level <= 1.0))
        throw std::invalid_argument("corrupt: uniform-mix level must lie in [0,1]");
      for (double& x : out.values) x = (1.0 - level) * x + level;
      return out;
    }
    case CorruptVariant::Gaussian: {
      if (!(level > 0.0))
        throw std::invalid_argument("corrupt: gaussian level must be > 0");
      Rng rng(seed);
      for (double& x : out.values) x = std::max(0.0, x + level * rng.normal());
      double mass = out.total_mass();
      if (mass <= 0.0)
        throw NumericError("corrupt: gaussian clipping removed all mass");
      for (double& x : out.values) x /= mass;
      return out;
    }
    case CorruptVariant::Multinomial: {
      // N ~ Mult(n, {H_ab delta^2}) drawn as n categorical picks by CDF
      // inversion; exact unit mass by construction.
      Rng rng(seed);
      const std::size_t cells = out.values.size();
      std::vector<double> cdf(cells);
      double acc = 0.0;
      const double d2 = out.delta() * out.delta();
      for (std::size_t c = 0; c < cells; ++c) {
        acc += h.values[c] * d2;
        cdf[c] = acc;
      }
      std::vector<long long> counts(cells, 0);
      for (long long i = 0; i < h.n; ++i) {
        double p = rng.uniform() * acc;
        std::size_t idx =
            std::lower_bound(cdf.begin(), cdf.end(), p) - cdf.begin();
        if (idx >= cells) idx = cells - 1;
        ++counts[idx];
      }
      const double scale = 1.0 / (static_cast<double>(h.n) * d2);
      for (std::size_t c = 0; c < cells; ++c)
        out.values[c] = static_cast<double>(counts[c]) * scale;
      return out;
    }
  }
  throw std::invalid_argument("corrupt: unknown variant");
}

}  // namespace vdc
