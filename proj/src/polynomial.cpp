#include "gcife/polynomial.hpp"

#include <cassert>

namespace gcife {

double Poly1::eval(double t) const {
  double r = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * t + *it;
  return r;
}

std::vector<Poly1> legendre_monomial_tables(int m) {
  std::vector<std::vector<double>> p(m + 1);
  p[0] = {1.0};
  if (m >= 1) p[1] = {0.0, 1.0};
  for (int k = 1; k < m; ++k) {
    // (k+1) P_{k+1} = (2k+1) t P_k - k P_{k-1}
    std::vector<double> next(k + 2, 0.0);
    for (int i = 0; i <= k; ++i) next[i + 1] += (2.0 * k + 1.0) * p[k][i];
    for (int i = 0; i <= k - 1; ++i) next[i] -= k * p[k - 1][i];
    for (double& c : next) c /= (k + 1.0);
    p[k + 1] = std::move(next);
  }
  std::vector<Poly1> out;
  out.reserve(m + 1);
  for (auto& c : p) out.emplace_back(std::move(c));
  return out;
}

Poly2::Poly2(int degree) : degree_(degree), c_((degree + 1) * (degree + 1), 0.0) {}

double falling_factorial(int n, int k) {
  if (k > n) return 0.0;
  double f = 1.0;
  for (int i = 0; i < k; ++i) f *= n - i;
  return f;
}

double Poly2::eval(double u, double v, int du, int dv) const {
  double result = 0.0;
  for (int a = degree_; a >= du; --a) {
    double inner = 0.0;
    for (int b = degree_ - a; b >= dv; --b)
      inner = inner * v + falling_factorial(b, dv) * coef(a, b);
    result = result * u + falling_factorial(a, du) * inner;
  }
  return result;
}

Poly2 Poly2::tensor(int degree, const Poly1& fu, const Poly1& fv) {
  assert(fu.degree() + fv.degree() <= degree);
  Poly2 p(degree);
  for (int a = 0; a <= fu.degree(); ++a)
    for (int b = 0; b <= fv.degree(); ++b) p.coef(a, b) = fu[a] * fv[b];
  return p;
}

}  // namespace gcife
