#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crank/collective.hpp"
#include "crank/index.hpp"

namespace crank {

// Graded judgments on the four-point scale 0..3.
struct Qrels {
    std::map<std::pair<QueryId, PassageId>, int> judgments;

    int grade(QueryId q, PassageId p) const {
        auto it = judgments.find({q, p});
        return it == judgments.end() ? 0 : it->second;
    }
    bool judged_query(QueryId q) const;
};

// TREC format: qid 0 pid grade (whitespace-separated).
Qrels read_qrels(const std::string& path);
void write_qrels(const Qrels& qrels, const std::string& path);

// 1/rank of the first passage with grade >= cutoff within the top k, else 0.
double mrr_at_k(const Ranking& ranking, const Qrels& qrels, std::size_t k, int binary_cutoff);

// Gain 2^grade - 1, discount 1/log2(rank + 1), normalized by the ideal DCG.
// nullopt when the query has no judged-relevant passage (excluded from means).
std::optional<double> ndcg_at_k(const Ranking& ranking, const Qrels& qrels, std::size_t k);

// |relevant in top-k| / |relevant|; nullopt when the query has no relevant
// passage.
std::optional<double> recall_at_k(const Ranking& ranking, const Qrels& qrels, std::size_t k,
                                  int binary_cutoff);

struct PerQueryMetrics {
    double mrr_at_10 = 0.0;
    std::optional<double> ndcg_at_10;
    std::optional<double> recall_at_1000;
};

struct MetricsReport {
    double mrr_at_10 = 0.0;
    double ndcg_at_10 = 0.0;
    double recall_at_1000 = 0.0;
    double mrt_ms = 0.0;  // 0 when the run was not re-timed
    std::size_t evaluated_queries = 0;
    std::map<QueryId, PerQueryMetrics> per_query;
};

// Aggregates over run queries that have at least one judgment; queries with
// no relevant passage are excluded from the NDCG/Recall means but count 0
// toward MRR. Throws if run and qrels share no query id.
MetricsReport evaluate_run(const std::vector<Ranking>& rankings, const Qrels& qrels,
                           int binary_cutoff);

// Wall-clock mean per query in ms, single-threaded scoring, one discarded
// warm-up pass. Queries must already be encoded.
double measure_mrt(const std::vector<EncodedQuery>& queries, const EncodedIndex& index,
                   std::size_t depth, std::size_t repetitions);

struct PrCurve {
    int cutoff = 1;
    // Ordered by ascending threshold; recall non-increasing along the way.
    std::vector<std::tuple<double, double, double>> points;  // threshold, precision, recall
};

// Precision/recall of {score >= threshold} against {grade >= cutoff}, one
// point per distinct score value. Throws when there is nothing judged or no
// positive at the cutoff.
PrCurve pr_curve(const std::vector<std::pair<double, int>>& scored_grades, int cutoff);

void write_pr_curve(const PrCurve& curve, const std::string& path);

struct SweepGrid {
    std::vector<std::size_t> feedback_depth{1, 3, 5};
    std::vector<std::size_t> num_clusters{12, 24};
    std::vector<std::size_t> num_selected{5, 10};
    std::vector<double> beta{0.5, 1.0};
};

struct SweepRow {
    PrfConfig config;
    std::string varied;  // "default" or the field name
    double ndcg_at_10 = 0.0;
    double recall_at_1k = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<std::string> warnings;
};

// One-at-a-time sweep: the default config plus one row per off-default grid
// value, each differing from the default in exactly one field. Each row
// ranks every query's judged candidates by teacher score. Invalid variants
// (num_selected > num_clusters) are skipped with a warning.
SweepResult sweep(const PrfConfig& defaults, const SweepGrid& grid,
                  const std::vector<EncodedQuery>& queries, const EncodedIndex& index,
                  const IdfTable& idf, const Qrels& qrels, std::uint64_t seed,
                  int binary_cutoff);

}  // namespace crank
