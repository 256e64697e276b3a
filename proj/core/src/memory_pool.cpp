#include "dualloop/memory_pool.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "dualloop/types.hpp"

namespace dualloop {

Vector episodic_vector(std::span<const Vector> reflections) {
  if (reflections.empty()) throw ContractViolation("episodic vector of an empty episode");
  const std::size_t dim = reflections.front().size();
  Vector mean(dim, 0.0);
  for (const Vector& r : reflections) {
    if (r.size() != dim) throw ContractViolation("reflection embeddings have mixed dimensions");
    for (std::size_t i = 0; i < dim; ++i) mean[i] += r[i];
  }
  const auto n = static_cast<double>(reflections.size());
  for (double& x : mean) x /= n;
  return mean;
}

void MemoryPool::append(EpisodicEntry entry) {
  if (entry.step_count < 1) throw ContractViolation("episodic entry needs at least one step");
  if (!entries_.empty()) {
    if (entry.episode_id <= entries_.back().episode_id) {
      throw ContractViolation("episode ids must strictly increase");
    }
    if (entry.vector.size() != entries_.front().vector.size()) {
      throw ContractViolation("episodic vector dimension changed");
    }
  }
  if (capacity_ && *capacity_ == 0) return;
  if (capacity_ && entries_.size() == *capacity_) entries_.erase(entries_.begin());
  entries_.push_back(std::move(entry));
}

std::vector<RetrievedMemory> MemoryPool::retrieve(std::span<const double> query,
                                                  std::size_t k) const {
  std::vector<RetrievedMemory> scored;
  if (entries_.empty() || k == 0) return scored;
  if (query.size() != entries_.front().vector.size()) {
    throw ContractViolation(fmt::format("query dimension {} does not match pool dimension {}",
                                        query.size(), entries_.front().vector.size()));
  }
  const double qn = l2_norm(query);
  if (qn == 0.0) throw ContractViolation("retrieval query is a zero vector");
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const double en = l2_norm(entries_[i].vector);
    const double sim = en == 0.0 ? 0.0 : std::clamp(dot(query, entries_[i].vector) / (qn * en), -1.0, 1.0);
    ranked.emplace_back(sim, i);
  }
  // Ids increase with position, so the larger index is the newer episode.
  const std::size_t keep = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second > b.second;
                    });
  scored.reserve(keep);
  for (std::size_t r = 0; r < keep; ++r) scored.push_back({entries_[ranked[r].second], ranked[r].first});
  return scored;
}

void MemoryPool::save(const std::filesystem::path& jsonl_path,
                      const std::filesystem::path& blob_path) const {
  std::ofstream records(jsonl_path, std::ios::binary);
  std::ofstream blob(blob_path, std::ios::binary);
  if (!records || !blob) throw std::runtime_error("cannot write memory pool files");
  std::uint64_t offset = 0;
  for (const EpisodicEntry& e : entries_) {
    nlohmann::json j = {{"episode_id", e.episode_id},
                        {"step_count", e.step_count},
                        {"total_shared_reward", e.total_shared_reward},
                        {"vector_file_offset", offset},
                        {"dim", e.vector.size()}};
    records << j.dump() << '\n';
    detail::write_f64_le(blob, e.vector);
    offset += e.vector.size() * sizeof(double);
  }
}

MemoryPool MemoryPool::load(const std::filesystem::path& jsonl_path,
                            const std::filesystem::path& blob_path) {
  std::ifstream records(jsonl_path, std::ios::binary);
  std::ifstream blob(blob_path, std::ios::binary);
  if (!records || !blob) throw std::runtime_error("cannot open memory pool files");
  MemoryPool pool;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(records, line)) {
    ++lineno;
    if (line.empty()) continue;
    EpisodicEntry e;
    std::uint64_t offset = 0;
    std::size_t dim = 0;
    try {
      const auto j = nlohmann::json::parse(line);
      e.episode_id = j.at("episode_id").get<std::size_t>();
      e.step_count = j.at("step_count").get<std::size_t>();
      e.total_shared_reward = j.at("total_shared_reward").get<double>();
      offset = j.at("vector_file_offset").get<std::uint64_t>();
      dim = j.at("dim").get<std::size_t>();
    } catch (const nlohmann::json::exception& ex) {
      throw std::runtime_error(fmt::format("memory record {}: {}", lineno, ex.what()));
    }
    blob.seekg(static_cast<std::streamoff>(offset));
    e.vector.resize(dim);
    for (double& x : e.vector) {
      if (!detail::read_f64_le(blob, x)) {
        throw std::runtime_error(fmt::format("memory record {}: vector blob is truncated", lineno));
      }
    }
    pool.append(std::move(e));
  }
  return pool;
}

std::string bias_text(std::span<const RetrievedMemory> memories) {
  std::string out;
  std::size_t lines = 0;
  for (const RetrievedMemory& m : memories) {
    if (lines == kBiasTextMaxLines) break;
    out += fmt::format(
        "- Past episode {}: shared reward {:.3f} over {} steps, similarity {:.3f} to now.\n",
        m.entry.episode_id, m.entry.total_shared_reward, m.entry.step_count, m.similarity);
    ++lines;
  }
  return out;
}

}  // namespace dualloop
