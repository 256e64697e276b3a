#pragma once

#include <span>
#include <vector>

namespace dualloop {

using Vector = std::vector<double>;

double dot(std::span<const double> u, std::span<const double> v);
double l2_norm(std::span<const double> v);
double l2_distance(std::span<const double> u, std::span<const double> v);

/// Unit-length copy. Throws ContractViolation on a zero vector.
Vector normalized(std::span<const double> v);

/// Standard cosine similarity; throws on zero vectors or differing dimensions.
double cosine(std::span<const double> u, std::span<const double> v);

bool all_finite(std::span<const double> v);

/// Pads with zeros or truncates to `dim`.
Vector resized(std::span<const double> v, std::size_t dim);

}  // namespace dualloop
