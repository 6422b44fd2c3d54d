#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "reacts/extractor.h"
#include "reacts/gateway.h"

namespace reacts {

using SummaryId = std::size_t;

// Number of neighbours checked per incoming summary.
struct RetrievalLimit {
  explicit RetrievalLimit(std::size_t n = 20);
  std::size_t n;
};

struct Neighbor {
  SummaryId id;
  double similarity;
};

// Append-only exact cosine index. Vectors are L2-normalized on insert. The
// dimension is fixed by the constructor, or by the first insert when 0.
class VectorStore {
 public:
  explicit VectorStore(std::size_t dimension = 0) : dimension_(dimension) {}

  // Throws std::invalid_argument on dimension mismatch or a duplicate id.
  void insert(SummaryId id, const Embedding &vector);

  // The min(n, size()) most similar entries, most similar first; equal
  // similarities keep the lower id first.
  std::vector<Neighbor> retrieve(std::span<const float> query,
                                 RetrievalLimit limit) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t dimension() const { return dimension_; }
  bool contains(SummaryId id) const { return index_.count(id) > 0; }

  struct Entry {
    SummaryId id;
    Embedding unit;
  };
  const std::vector<Entry> &entries() const { return entries_; }

 private:
  std::size_t dimension_;
  std::vector<Entry> entries_;
  std::unordered_map<SummaryId, std::size_t> index_;
};

// Disjoint-set forest over summary ids with path compression and union by
// rank. Each root carries the member list, the shared event date and the
// creation index (smallest founding id).
class ClusterSet {
 public:
  // New singleton cluster; creation index = id.
  void add(SummaryId id, Date date);

  SummaryId find(SummaryId id) const;

  // Merges the clusters of a and b and returns the new root. Clusters with
  // different dates cannot be merged (std::logic_error).
  SummaryId unite(SummaryId a, SummaryId b);

  bool contains(SummaryId id) const { return parent_.count(id) > 0; }

  // Roots in ascending id order.
  std::vector<SummaryId> roots() const;
  // Ascending ids.
  const std::vector<SummaryId> &members(SummaryId root) const;
  std::size_t size(SummaryId root) const { return members(root).size(); }
  Date date(SummaryId root) const;
  std::size_t creation_index(SummaryId root) const;

  std::size_t cluster_count() const { return info_.size(); }
  std::size_t element_count() const { return parent_.size(); }

  // Throws std::logic_error if the forest, the member lists or the date
  // homogeneity are inconsistent. dates maps each id to its event date.
  void check_invariants(const std::map<SummaryId, Date> &dates) const;

  nlohmann::json to_json() const;
  static ClusterSet from_json(const nlohmann::json &j);

 private:
  struct RootInfo {
    std::vector<SummaryId> members;
    Date date;
    std::size_t creation_index = 0;
  };
  const RootInfo &info(SummaryId root) const;

  mutable std::map<SummaryId, SummaryId> parent_;
  std::map<SummaryId, int> rank_;
  std::map<SummaryId, RootInfo> info_;
};

// Streaming event clustering: each accepted summary is compared with its
// nearest stored neighbours and joins the cluster of the first one judged to
// be the same event.
class ClusterEngine {
 public:
  ClusterEngine(const Gateway &gateway, FewShotExamples few_shot,
                GenerationConfig similarity_config =
                    GenerationConfig::defaults_for(PromptKind::kSimilarity),
                RetrievalLimit limit = RetrievalLimit{});

  // False without an LLM call when the dates differ; otherwise asks the
  // similarity prompt and accepts answers starting with "yes".
  bool same_event(const EventSummary &a, const EventSummary &b,
                  const TopicQuery &query) const;

  // Inserts summary (id = arrival_index). All LLM calls happen before any
  // state changes, so a thrown gateway error leaves the engine untouched.
  SummaryId assign(const EventSummary &summary, const Embedding &vector,
                   const TopicQuery &query);

  const VectorStore &store() const { return store_; }
  const ClusterSet &clusters() const { return clusters_; }
  const std::map<SummaryId, EventSummary> &summaries() const { return summaries_; }
  std::size_t llm_calls() const { return llm_calls_; }

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json &snapshot);

 private:
  const Gateway &gateway_;
  FewShotExamples few_shot_;
  GenerationConfig similarity_config_;
  RetrievalLimit limit_;
  VectorStore store_;
  ClusterSet clusters_;
  std::map<SummaryId, EventSummary> summaries_;
  mutable std::size_t llm_calls_ = 0;
};

}  // namespace reacts
