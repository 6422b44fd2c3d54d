#pragma once

#include <map>
#include <string>
#include <vector>

#include "reacts/cluster.h"
#include "reacts/types.h"

namespace reacts {

// The min(l, #clusters) largest clusters; equal sizes go to the cluster
// founded first.
std::vector<SummaryId> rank_clusters(const ClusterSet &clusters, int l);

// Ascending cluster date, then creation index.
std::vector<SummaryId> sort_by_time(const ClusterSet &clusters,
                                    std::vector<SummaryId> roots);

// TextRank over sentences. weight(i, j) = |shared tokens| /
// (log|S_i| + log|S_j|), zero when either sentence has fewer than two
// tokens. Tokens are alnum_tokens(); |S| counts repeats, sharing does not.
struct SentenceGraph {
  std::vector<std::string> sentences;
  std::vector<std::vector<std::string>> tokens;
  std::vector<std::vector<double>> weights;
  std::vector<double> scores;
  int iterations = 0;
  double final_delta = 0.0;
};

struct TextRankOptions {
  double damping = 0.85;
  double epsilon = 1e-4;
  int max_iterations = 100;
};

SentenceGraph build_sentence_graph(const std::vector<std::string> &sentences);

// Synchronous power iteration from all-ones scores:
//   s_i <- (1 - d) + d * sum_j w_ji / out_j * s_j
// until the largest change drops below epsilon or the cap is hit.
void run_textrank(SentenceGraph &graph, const TextRankOptions &options = {});

// Exact duplicates are dropped first. With at most k distinct sentences all
// are returned; otherwise the k best (ties to the earlier sentence), in
// their original order. Throws std::invalid_argument on empty input.
std::vector<std::string> textrank_select(const std::vector<std::string> &sentences,
                                         int k,
                                         const TextRankOptions &options = {});

// Top-l clusters by size, in date order, each compressed to k sentences.
Timeline build_timeline(const ClusterSet &clusters,
                        const std::map<SummaryId, EventSummary> &summaries,
                        const TopicQuery &query);

// "YYYY-MM-DD: description" per line.
std::string timeline_to_text(const Timeline &timeline);

}  // namespace reacts
