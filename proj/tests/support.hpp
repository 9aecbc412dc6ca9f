#pragma once

#include "gcife/curve.hpp"
#include "gcife/polynomial.hpp"

#include <cmath>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

namespace gcife::testing {

inline std::uint64_t seed() {
  if (const char* s = std::getenv("GCIFE_SEED")) return std::stoull(s);
  return 20240611ULL;
}

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(seed());
  return gen;
}

inline double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng()); }

inline const double kR0 = 1.0 / std::sqrt(3.0);

inline std::vector<InterfaceCurve> builtin_curves() {
  return {make_circle(0.0, 0.0, kR0), make_ellipse(0.1, -0.05, 0.6, 0.4),
          make_flower(0.0, 0.0, 0.5, 0.1, 5)};
}

/// Random polynomial of total degree <= deg in (eta / eta_scale, xi).
struct RandomFrenetPoly {
  Poly2 p;
  double eta_scale = 1.0;

  double value(double eta, double xi, int de = 0, int dx = 0) const {
    return p.eval(eta / eta_scale, xi, de, dx) * std::pow(eta_scale, -de);
  }
};

inline RandomFrenetPoly random_frenet_poly(int deg, double eta_scale) {
  RandomFrenetPoly r{Poly2(deg), eta_scale};
  for (int a = 0; a <= deg; ++a)
    for (int b = 0; b <= deg - a; ++b) r.p.coef(a, b) = uniform(-1.0, 1.0);
  return r;
}

/// Observed order log(e1 / e2) / log(h1 / h2).
inline double observed_order(double e1, double e2, double h1, double h2) {
  return std::log(e1 / e2) / std::log(h1 / h2);
}

}  // namespace gcife::testing
