#pragma once

#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dualloop/rng.hpp"
#include "dualloop/types.hpp"
#include "dualloop/vector_math.hpp"

namespace dualloop {

inline constexpr std::size_t kDefaultLatentDim = 3077;

struct LatentVector {
  Vector values;
  std::size_t step_index = 0;
};

/// Seeded random direction with unit L2 norm.
LatentVector init_latent(std::size_t dim, std::uint64_t seed);

/// The update direction f(e, r) = tanh(r) * (e - z).
Vector latent_direction(std::span<const double> z, std::span<const double> e, double reward);

/// z' = z + eta * tanh(reward) * (e - z). step_index advances by one.
LatentVector latent_update(const LatentVector& z, std::span<const double> embedding, double reward,
                           double eta);

struct StyleEntry {
  std::string phrase;
  Vector anchor;
};

class StyleCodebook {
 public:
  StyleCodebook() = default;
  /// Normalizes anchors; rejects duplicate phrases and mismatched dimensions.
  explicit StyleCodebook(std::vector<StyleEntry> entries);

  /// Anchors from embedding each phrase.
  static StyleCodebook from_phrases(const std::vector<std::string>& phrases,
                                    const std::function<Vector(std::string_view)>& embed);

  const std::vector<StyleEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<StyleEntry> entries_;
};

/// The shipped persuasion-style phrase list.
const std::vector<std::string>& default_style_phrases();

struct StyleDecodeResult {
  std::vector<std::string> phrases;
  /// Set when z was zero and codebook order was returned.
  bool fallback = false;
};

/// Top-k phrases by cosine(z, anchor), ties by codebook order.
StyleDecodeResult style_decode(std::span<const double> z, const StyleCodebook& codebook,
                               std::size_t k);

/// Initial vector plus one snapshot per reflection update.
struct LatentTrajectory {
  LatentVector initial;
  std::vector<LatentVector> updates;

  /// initial followed by the updates; index t is the state after t reflections.
  std::vector<Vector> points() const;
};

/// Header `agent,step,component_0..component_{k-1}`; k = min(dim, max_components) unless
/// max_components is 0, which writes every component.
void write_trajectory_csv(std::ostream& out, std::string_view agent,
                          const LatentTrajectory& trajectory, std::size_t max_components,
                          bool header);

}  // namespace dualloop
