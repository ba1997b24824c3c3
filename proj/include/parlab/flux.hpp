#pragma once

// The p-Laplace flux (mu^2 + |xi|^2)^{(p-2)/2} xi acting on k x d gradient
// matrices, and the two structural ratios comparing flux differences against
// the shared degeneracy weight.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "parlab/field.hpp"

namespace parlab {

// (mu^2 + rho2)^{(p-2)/2} with the removable singularity at rho2 = mu = 0.
inline double flux_scalar_factor(double rho2, double mu, double p) {
  double s2 = mu * mu + rho2;
  if (s2 <= 0.0) return p >= 2.0 ? 0.0 : 0.0;  // only reached when mu = rho = 0
  return std::pow(s2, 0.5 * (p - 2.0));
}

// Flux of a k x d gradient matrix (Frobenius norm couples the entries).
inline std::vector<double> flux(std::span<const double> xi, double mu, double p) {
  double rho2 = 0;
  for (double v : xi) rho2 += v * v;
  std::vector<double> out(xi.size(), 0.0);
  if (rho2 == 0.0 && mu == 0.0) return out;  // |xi|^{p-1} -> 0 for every p > 1
  double s = flux_scalar_factor(rho2, mu, p);
  for (size_t i = 0; i < xi.size(); ++i) out[i] = s * xi[i];
  return out;
}

struct FluxGap {
  double lipschitz_ratio = 0.0;
  double monotonicity_ratio = 0.0;
};

// Ratios of |F(xi)-F(xt)| and (F(xi)-F(xt)).(xi-xt) against the weight
// (mu^2+|xi|^2+|xt|^2)^{(p-2)/2} |xi-xt| (resp. |xi-xt|^2). Both are bounded
// above and below by constants depending only on p.
inline FluxGap flux_gap(std::span<const double> xi, std::span<const double> xt, double mu, double p) {
  if (xi.size() != xt.size()) throw std::invalid_argument("flux_gap: size mismatch");
  double diff2 = 0;
  for (size_t i = 0; i < xi.size(); ++i) {
    double d = xi[i] - xt[i];
    diff2 += d * d;
  }
  if (diff2 == 0.0) throw std::invalid_argument("flux_gap: xi and xi~ must differ");
  std::vector<double> fa = flux(xi, mu, p);
  std::vector<double> fb = flux(xt, mu, p);
  double num2 = 0, dot = 0, na2 = 0, nb2 = 0;
  for (size_t i = 0; i < xi.size(); ++i) {
    double d = fa[i] - fb[i];
    num2 += d * d;
    dot += d * (xi[i] - xt[i]);
    na2 += xi[i] * xi[i];
    nb2 += xt[i] * xt[i];
  }
  double w = std::pow(mu * mu + na2 + nb2, 0.5 * (p - 2.0));
  FluxGap r;
  r.lipschitz_ratio = std::sqrt(num2) / (w * std::sqrt(diff2));
  r.monotonicity_ratio = dot / (w * diff2);
  return r;
}

}  // namespace parlab
