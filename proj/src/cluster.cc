#include "reacts/cluster.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "reacts/error.h"

namespace reacts {

RetrievalLimit::RetrievalLimit(std::size_t n) : n(n) {
  if (n < 1) throw std::invalid_argument("retrieval limit must be >= 1");
}

void VectorStore::insert(SummaryId id, const Embedding &vector) {
  if (dimension_ == 0) {
    if (vector.empty()) throw std::invalid_argument("empty embedding");
    dimension_ = vector.size();
  }
  if (vector.size() != dimension_) {
    throw std::invalid_argument("embedding dimension " +
                                std::to_string(vector.size()) +
                                " does not match store dimension " +
                                std::to_string(dimension_));
  }
  if (index_.count(id)) {
    throw std::invalid_argument("summary " + std::to_string(id) +
                                " is already stored");
  }
  double norm = 0.0;
  for (float x : vector) norm += static_cast<double>(x) * x;
  Embedding unit = vector;
  if (norm > 0.0) {
    const double inv = 1.0 / std::sqrt(norm);
    for (float &x : unit) x = static_cast<float>(x * inv);
  }
  index_.emplace(id, entries_.size());
  entries_.push_back({id, std::move(unit)});
}

std::vector<Neighbor> VectorStore::retrieve(std::span<const float> query,
                                            RetrievalLimit limit) const {
  if (entries_.empty()) return {};
  if (query.size() != dimension_) {
    throw std::invalid_argument("query dimension " + std::to_string(query.size()) +
                                " does not match store dimension " +
                                std::to_string(dimension_));
  }
  double qnorm = 0.0;
  for (float x : query) qnorm += static_cast<double>(x) * x;
  const double qinv = qnorm > 0.0 ? 1.0 / std::sqrt(qnorm) : 0.0;

  std::vector<Neighbor> scored;
  scored.reserve(entries_.size());
  for (const Entry &e : entries_) {
    double dot = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) {
      dot += static_cast<double>(e.unit[i]) * query[i];
    }
    scored.push_back({e.id, dot * qinv});
  }
  const std::size_t k = std::min(limit.n, scored.size());
  auto better = [](const Neighbor &a, const Neighbor &b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  };
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), better);
  scored.resize(k);
  return scored;
}

void ClusterSet::add(SummaryId id, Date date) {
  if (parent_.count(id)) {
    throw std::invalid_argument("summary " + std::to_string(id) +
                                " is already clustered");
  }
  parent_[id] = id;
  rank_[id] = 0;
  info_[id] = RootInfo{{id}, date, id};
}

SummaryId ClusterSet::find(SummaryId id) const {
  auto it = parent_.find(id);
  if (it == parent_.end()) {
    throw std::out_of_range("unknown summary " + std::to_string(id));
  }
  SummaryId root = id;
  while (parent_.at(root) != root) root = parent_.at(root);
  // Path compression.
  while (parent_.at(id) != root) {
    SummaryId next = parent_.at(id);
    parent_[id] = root;
    id = next;
  }
  return root;
}

SummaryId ClusterSet::unite(SummaryId a, SummaryId b) {
  SummaryId ra = find(a);
  SummaryId rb = find(b);
  if (ra == rb) return ra;
  if (info_.at(ra).date != info_.at(rb).date) {
    throw std::logic_error("cannot merge clusters with different dates (" +
                           info_.at(ra).date.iso() + " vs " +
                           info_.at(rb).date.iso() + ")");
  }
  if (rank_[ra] < rank_[rb]) std::swap(ra, rb);
  parent_[rb] = ra;
  if (rank_[ra] == rank_[rb]) ++rank_[ra];

  RootInfo absorbed = std::move(info_.at(rb));
  info_.erase(rb);
  RootInfo &kept = info_.at(ra);
  std::vector<SummaryId> merged;
  merged.reserve(kept.members.size() + absorbed.members.size());
  std::merge(kept.members.begin(), kept.members.end(), absorbed.members.begin(),
             absorbed.members.end(), std::back_inserter(merged));
  kept.members = std::move(merged);
  kept.creation_index = std::min(kept.creation_index, absorbed.creation_index);
  return ra;
}

std::vector<SummaryId> ClusterSet::roots() const {
  std::vector<SummaryId> out;
  out.reserve(info_.size());
  for (const auto &[root, _] : info_) out.push_back(root);
  return out;
}

const ClusterSet::RootInfo &ClusterSet::info(SummaryId root) const {
  auto it = info_.find(root);
  if (it == info_.end()) {
    throw std::out_of_range(std::to_string(root) + " is not a cluster root");
  }
  return it->second;
}

const std::vector<SummaryId> &ClusterSet::members(SummaryId root) const {
  return info(root).members;
}

Date ClusterSet::date(SummaryId root) const { return info(root).date; }

std::size_t ClusterSet::creation_index(SummaryId root) const {
  return info(root).creation_index;
}

void ClusterSet::check_invariants(const std::map<SummaryId, Date> &dates) const {
  std::size_t total = 0;
  std::map<SummaryId, SummaryId> owner;
  for (const auto &[root, meta] : info_) {
    if (parent_.at(root) != root) {
      throw std::logic_error("root " + std::to_string(root) + " has a parent");
    }
    if (!std::is_sorted(meta.members.begin(), meta.members.end())) {
      throw std::logic_error("member list of " + std::to_string(root) +
                             " is not sorted");
    }
    std::size_t smallest = meta.members.empty() ? 0 : meta.members.front();
    if (meta.creation_index != smallest) {
      throw std::logic_error("creation index of " + std::to_string(root) +
                             " is not its smallest member");
    }
    for (SummaryId m : meta.members) {
      if (!owner.emplace(m, root).second) {
        throw std::logic_error("summary " + std::to_string(m) +
                               " belongs to two clusters");
      }
      if (find(m) != root) {
        throw std::logic_error("summary " + std::to_string(m) +
                               " does not reach its cluster root");
      }
      auto d = dates.find(m);
      if (d == dates.end() || d->second != meta.date) {
        throw std::logic_error("cluster " + std::to_string(root) +
                               " is not date-homogeneous");
      }
    }
    total += meta.members.size();
  }
  if (total != parent_.size()) {
    throw std::logic_error("cluster member counts do not cover every summary");
  }
}

nlohmann::json ClusterSet::to_json() const {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto &[root, meta] : info_) {
    clusters.push_back({{"root", root},
                        {"date", meta.date.iso()},
                        {"creation_index", meta.creation_index},
                        {"members", meta.members}});
  }
  return clusters;
}

ClusterSet ClusterSet::from_json(const nlohmann::json &j) {
  ClusterSet set;
  for (const auto &c : j) {
    auto date = Date::parse_iso(c.at("date").get<std::string>());
    if (!date) throw DataError("cluster snapshot has an invalid date");
    SummaryId root = c.at("root").get<SummaryId>();
    auto members = c.at("members").get<std::vector<SummaryId>>();
    std::sort(members.begin(), members.end());
    if (members.empty() ||
        std::find(members.begin(), members.end(), root) == members.end()) {
      throw DataError("cluster snapshot root is not one of its members");
    }
    for (SummaryId m : members) {
      if (set.parent_.count(m)) throw DataError("cluster snapshot repeats a member");
      set.parent_[m] = root;
      set.rank_[m] = 0;
    }
    set.rank_[root] = members.size() > 1 ? 1 : 0;
    set.info_[root] =
        RootInfo{std::move(members), *date, c.at("creation_index").get<std::size_t>()};
  }
  return set;
}

ClusterEngine::ClusterEngine(const Gateway &gateway, FewShotExamples few_shot,
                             GenerationConfig similarity_config,
                             RetrievalLimit limit)
    : gateway_(gateway),
      few_shot_(std::move(few_shot)),
      similarity_config_(std::move(similarity_config)),
      limit_(limit) {}

bool ClusterEngine::same_event(const EventSummary &a, const EventSummary &b,
                               const TopicQuery &query) const {
  if (a.event_date != b.event_date) return false;
  Slots slots = {{"example_1", few_shot_.similarity_examples[0]},
                 {"example_2", few_shot_.similarity_examples[1]},
                 {"example_3", few_shot_.similarity_examples[2]},
                 {"keyword", query.keyword},
                 {"event1", a.line()},
                 {"event2", b.line()}};
  ++llm_calls_;
  return parse_yes(gateway_.chat(PromptKind::kSimilarity, slots, similarity_config_));
}

SummaryId ClusterEngine::assign(const EventSummary &summary,
                                const Embedding &vector,
                                const TopicQuery &query) {
  const SummaryId id = summary.arrival_index;
  if (summaries_.count(id)) {
    throw std::invalid_argument("summary " + std::to_string(id) +
                                " was already assigned");
  }
  if (store_.dimension() != 0 && vector.size() != store_.dimension()) {
    throw std::invalid_argument("embedding dimension mismatch");
  }
  std::optional<SummaryId> match;
  for (const Neighbor &n : store_.retrieve(vector, limit_)) {
    if (same_event(summary, summaries_.at(n.id), query)) {
      match = n.id;
      break;
    }
  }
  store_.insert(id, vector);
  clusters_.add(id, summary.event_date);
  summaries_.emplace(id, summary);
  if (match) clusters_.unite(*match, id);
  return clusters_.find(id);
}

nlohmann::json ClusterEngine::snapshot() const {
  nlohmann::json summaries = nlohmann::json::array();
  for (const auto &[id, s] : summaries_) summaries.push_back(to_json(s));
  nlohmann::json vectors = nlohmann::json::array();
  for (const auto &e : store_.entries()) {
    vectors.push_back({{"id", e.id}, {"vector", e.unit}});
  }
  return {{"dimension", store_.dimension()},
          {"summaries", summaries},
          {"vectors", vectors},
          {"clusters", clusters_.to_json()}};
}

void ClusterEngine::restore(const nlohmann::json &snapshot) {
  try {
    VectorStore store(snapshot.at("dimension").get<std::size_t>());
    for (const auto &v : snapshot.at("vectors")) {
      store.insert(v.at("id").get<SummaryId>(), v.at("vector").get<Embedding>());
    }
    std::map<SummaryId, EventSummary> summaries;
    std::map<SummaryId, Date> dates;
    for (const auto &s : snapshot.at("summaries")) {
      EventSummary summary = event_summary_from_json(s);
      dates[summary.arrival_index] = summary.event_date;
      summaries.emplace(summary.arrival_index, std::move(summary));
    }
    ClusterSet clusters = ClusterSet::from_json(snapshot.at("clusters"));
    clusters.check_invariants(dates);
    if (store.size() != summaries.size()) {
      throw DataError("snapshot vector and summary counts differ");
    }
    store_ = std::move(store);
    summaries_ = std::move(summaries);
    clusters_ = std::move(clusters);
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("malformed cluster snapshot: ") + e.what());
  } catch (const std::logic_error &e) {
    throw DataError(std::string("inconsistent cluster snapshot: ") + e.what());
  }
}

}  // namespace reacts
