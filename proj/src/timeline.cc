#include "reacts/timeline.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "reacts/text.h"

namespace reacts {

std::vector<SummaryId> rank_clusters(const ClusterSet &clusters, int l) {
  std::vector<SummaryId> roots = clusters.roots();
  auto bigger = [&](SummaryId a, SummaryId b) {
    if (clusters.size(a) != clusters.size(b)) return clusters.size(a) > clusters.size(b);
    return clusters.creation_index(a) < clusters.creation_index(b);
  };
  const std::size_t keep = std::min<std::size_t>(std::max(l, 0), roots.size());
  std::partial_sort(roots.begin(), roots.begin() + keep, roots.end(), bigger);
  roots.resize(keep);
  return roots;
}

std::vector<SummaryId> sort_by_time(const ClusterSet &clusters,
                                    std::vector<SummaryId> roots) {
  std::sort(roots.begin(), roots.end(), [&](SummaryId a, SummaryId b) {
    if (clusters.date(a) != clusters.date(b)) return clusters.date(a) < clusters.date(b);
    return clusters.creation_index(a) < clusters.creation_index(b);
  });
  return roots;
}

SentenceGraph build_sentence_graph(const std::vector<std::string> &sentences) {
  SentenceGraph g;
  g.sentences = sentences;
  const std::size_t n = sentences.size();
  g.tokens.reserve(n);
  std::vector<std::set<std::string>> vocab(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.tokens.push_back(alnum_tokens(sentences[i]));
    vocab[i] = {g.tokens[i].begin(), g.tokens[i].end()};
  }
  g.weights.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (g.tokens[i].size() < 2 || g.tokens[j].size() < 2) continue;
      std::size_t shared = 0;
      for (const auto &w : vocab[i]) shared += vocab[j].count(w);
      if (shared == 0) continue;
      double w = static_cast<double>(shared) /
                 (std::log(static_cast<double>(g.tokens[i].size())) +
                  std::log(static_cast<double>(g.tokens[j].size())));
      g.weights[i][j] = g.weights[j][i] = w;
    }
  }
  g.scores.assign(n, 1.0);
  return g;
}

void run_textrank(SentenceGraph &g, const TextRankOptions &options) {
  const std::size_t n = g.sentences.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = std::accumulate(g.weights[j].begin(), g.weights[j].end(), 0.0);
  }
  g.scores.assign(n, 1.0);
  g.iterations = 0;
  g.final_delta = 0.0;
  std::vector<double> next(n);
  while (g.iterations < options.max_iterations) {
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double incoming = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (out[j] > 0.0 && g.weights[j][i] > 0.0) {
          incoming += g.weights[j][i] / out[j] * g.scores[j];
        }
      }
      next[i] = (1.0 - options.damping) + options.damping * incoming;
      delta = std::max(delta, std::abs(next[i] - g.scores[i]));
    }
    g.scores.swap(next);
    ++g.iterations;
    g.final_delta = delta;
    if (delta < options.epsilon) break;
  }
}

std::vector<std::string> textrank_select(const std::vector<std::string> &sentences,
                                         int k, const TextRankOptions &options) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  std::vector<std::string> distinct;
  std::set<std::string> seen;
  for (const auto &s : sentences) {
    if (seen.insert(s).second) distinct.push_back(s);
  }
  if (distinct.empty()) throw std::invalid_argument("textrank_select needs sentences");
  if (distinct.size() <= static_cast<std::size_t>(k)) return distinct;

  SentenceGraph g = build_sentence_graph(distinct);
  run_textrank(g, options);
  std::vector<std::size_t> order(distinct.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return g.scores[a] > g.scores[b];
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  std::vector<std::string> picked;
  picked.reserve(order.size());
  for (std::size_t i : order) picked.push_back(distinct[i]);
  return picked;
}

Timeline build_timeline(const ClusterSet &clusters,
                        const std::map<SummaryId, EventSummary> &summaries,
                        const TopicQuery &query) {
  Timeline timeline{query.keyword, query.constraint, {}};
  for (SummaryId root : sort_by_time(clusters, rank_clusters(clusters, query.l))) {
    std::vector<std::string> descriptions;
    for (SummaryId id : clusters.members(root)) {
      descriptions.push_back(summaries.at(id).description);
    }
    std::string text;
    for (const auto &s : textrank_select(descriptions, query.k)) {
      if (!text.empty()) text += ' ';
      text += s;
    }
    timeline.events.push_back({clusters.date(root), std::move(text)});
  }
  return timeline;
}

std::string timeline_to_text(const Timeline &timeline) {
  std::string out;
  for (const auto &e : timeline.events) {
    out += e.date.iso() + ": " + e.text + "\n";
  }
  return out;
}

}  // namespace reacts
