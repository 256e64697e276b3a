#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualloop/vector_math.hpp"

namespace dualloop {

struct EpisodicEntry {
  std::size_t episode_id = 0;
  Vector vector;
  double total_shared_reward = 0.0;
  std::size_t step_count = 1;
};

/// Componentwise mean of the episode's reflection embeddings.
Vector episodic_vector(std::span<const Vector> reflections);

struct RetrievedMemory {
  EpisodicEntry entry;
  double similarity = 0.0;
};

/// Append-only store of episode summaries, shared by the meta-controller.
class MemoryPool {
 public:
  explicit MemoryPool(std::optional<std::size_t> capacity = std::nullopt)
      : capacity_(capacity) {}

  /// Episode ids must strictly increase; step_count must be at least 1.
  /// When full, the oldest entry is evicted.
  void append(EpisodicEntry entry);

  /// Top-k by cosine to the query, descending; equal scores prefer the newer episode.
  /// Entries with a zero vector score 0.
  std::vector<RetrievedMemory> retrieve(std::span<const double> query, std::size_t k) const;

  const std::vector<EpisodicEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::optional<std::size_t> capacity() const { return capacity_; }

  /// Writes `<stem>.jsonl` records and the `<stem>.bin` vector blob.
  void save(const std::filesystem::path& jsonl_path, const std::filesystem::path& blob_path) const;
  static MemoryPool load(const std::filesystem::path& jsonl_path,
                         const std::filesystem::path& blob_path);

 private:
  std::optional<std::size_t> capacity_;
  std::vector<EpisodicEntry> entries_;
};

/// Prompt fragment, one line per retrieved memory; empty input gives an empty string.
std::string bias_text(std::span<const RetrievedMemory> memories);

inline constexpr std::size_t kBiasTextMaxLines = 8;

}  // namespace dualloop
