#include "dualloop/vector_math.hpp"

#include <cmath>

#include "dualloop/types.hpp"

namespace dualloop {

namespace {

void require_same_dim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ContractViolation("vector dimensions differ");
}

}  // namespace

double dot(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u, v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double l2_distance(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u, v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Vector normalized(std::span<const double> v) {
  const double n = l2_norm(v);
  if (n == 0.0) throw ContractViolation("cannot normalize a zero vector");
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u, v);
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) throw ContractViolation("cosine of a zero vector");
  const double c = dot(u, v) / (nu * nv);
  return std::fmax(-1.0, std::fmin(1.0, c));
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Vector resized(std::span<const double> v, std::size_t dim) {
  Vector out(dim, 0.0);
  for (std::size_t i = 0; i < dim && i < v.size(); ++i) out[i] = v[i];
  return out;
}

}  // namespace dualloop
