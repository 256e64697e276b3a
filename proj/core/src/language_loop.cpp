#include "dualloop/language_loop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "embedded_data.hpp"

namespace dualloop {

LatentVector init_latent(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ContractViolation("latent dimension must be positive");
  Rng rng(seed);
  Vector v(dim);
  for (double& x : v) x = rng.normal();
  return {normalized(v), 0};
}

Vector latent_direction(std::span<const double> z, std::span<const double> e, double reward) {
  if (z.size() != e.size()) throw ContractViolation("embedding and latent dimensions differ");
  const double gate = std::tanh(reward);
  Vector f(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) f[i] = gate * (e[i] - z[i]);
  return f;
}

LatentVector latent_update(const LatentVector& z, std::span<const double> embedding, double reward,
                           double eta) {
  if (embedding.size() != z.values.size()) {
    throw ContractViolation(fmt::format("embedding dimension {} does not match latent dimension {}",
                                        embedding.size(), z.values.size()));
  }
  if (!std::isfinite(reward) || !std::isfinite(eta) || !all_finite(embedding) ||
      !all_finite(z.values)) {
    throw ContractViolation("latent update inputs must be finite");
  }
  if (eta < 0.0) throw ContractViolation("latent learning rate must be nonnegative");
  LatentVector out{z.values, z.step_index + 1};
  const double gate = eta * std::tanh(reward);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] += gate * (embedding[i] - z.values[i]);
  }
  return out;
}

StyleCodebook::StyleCodebook(std::vector<StyleEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string> seen;
  for (StyleEntry& e : entries_) {
    if (!seen.insert(e.phrase).second) {
      throw ContractViolation(fmt::format("duplicate style phrase '{}'", e.phrase));
    }
    if (e.anchor.size() != entries_.front().anchor.size()) {
      throw ContractViolation("style anchors have mixed dimensions");
    }
    e.anchor = normalized(e.anchor);
  }
}

StyleCodebook StyleCodebook::from_phrases(const std::vector<std::string>& phrases,
                                          const std::function<Vector(std::string_view)>& embed) {
  std::vector<StyleEntry> entries;
  entries.reserve(phrases.size());
  for (const std::string& p : phrases) entries.push_back({p, embed(p)});
  return StyleCodebook(std::move(entries));
}

const std::vector<std::string>& default_style_phrases() {
  static const std::vector<std::string> phrases = [] {
    std::vector<std::string> out;
    const std::string_view text = embedded::style_phrases_txt();
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      std::string_view line = text.substr(pos, nl - pos);
      pos = nl + 1;
      while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.remove_suffix(1);
      if (line.empty() || line.front() == '#') continue;
      out.emplace_back(line);
    }
    return out;
  }();
  return phrases;
}

StyleDecodeResult style_decode(std::span<const double> z, const StyleCodebook& codebook,
                               std::size_t k) {
  if (codebook.empty()) throw ContractViolation("style codebook is empty");
  if (k < 1 || k > codebook.size()) throw ContractViolation("style_decode k out of range");
  StyleDecodeResult result;
  const auto& entries = codebook.entries();
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (l2_norm(z) == 0.0) {
    result.fallback = true;
  } else {
    std::vector<double> score(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) score[i] = cosine(z, entries[i].anchor);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  }
  for (std::size_t i = 0; i < k; ++i) result.phrases.push_back(entries[order[i]].phrase);
  return result;
}

std::vector<Vector> LatentTrajectory::points() const {
  std::vector<Vector> out;
  out.reserve(updates.size() + 1);
  out.push_back(initial.values);
  for (const LatentVector& u : updates) out.push_back(u.values);
  return out;
}

void write_trajectory_csv(std::ostream& out, std::string_view agent,
                          const LatentTrajectory& trajectory, std::size_t max_components,
                          bool header) {
  const std::size_t dim = trajectory.initial.values.size();
  const std::size_t cols = max_components == 0 ? dim : std::min(dim, max_components);
  if (header) {
    out << "agent,step";
    for (std::size_t c = 0; c < cols; ++c) out << ",component_" << c;
    out << '\n';
  }
  auto row = [&](const LatentVector& v) {
    out << agent << ',' << v.step_index;
    for (std::size_t c = 0; c < cols; ++c) out << ',' << fmt::format("{}", v.values[c]);
    out << '\n';
  };
  row(trajectory.initial);
  for (const LatentVector& u : trajectory.updates) row(u);
}

}  // namespace dualloop
