#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "crank/common.hpp"
#include "crank/index.hpp"
#include "crank/relevance.hpp"

namespace crank {

struct PrfConfig {
    std::size_t feedback_depth = 3;  // passages pooled as pseudo-relevance feedback
    std::size_t num_clusters = 24;   // k-means clusters over pooled token rows
    std::size_t num_selected = 10;   // centroids kept after the IDF filter
    double beta = 1.0;               // weight of the centroid augmentation term

    void validate() const {
        if (feedback_depth == 0 || num_clusters == 0 || num_selected == 0)
            throw ValidationError("prf config values must be positive");
        if (num_selected > num_clusters)
            throw ValidationError("num_selected must not exceed num_clusters");
    }
};

struct KmeansResult {
    std::vector<std::vector<double>> centroids;
    std::vector<double> sse_history;  // one entry per Lloyd iteration, non-increasing
    std::size_t iterations = 0;
};

// Seeded k-means++ init, Lloyd iterations until centroid movement < tol or
// max_iters. Empty clusters are re-seeded to the point farthest from its
// centroid.
KmeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                    std::uint64_t seed, std::size_t max_iters = 50, double tol = 1e-6);

struct CentroidSet {
    QueryId query_id = 0;
    std::vector<std::vector<double>> centroids;  // num_clusters vectors of dim_out
};

// Pools the projected token rows of the top feedback_depth passages and
// clusters them.
CentroidSet extract_centroids(QueryId query_id, const Ranking& ranking, const EncodedIndex& index,
                              const PrfConfig& cfg, std::uint64_t seed);

struct CollectiveCentroids {
    QueryId query_id = 0;
    std::vector<std::vector<double>> vectors;  // num_selected, ordered by weight desc
    std::vector<double> weights;               // IDF of each nearest token
    std::vector<TokenId> nearest_tokens;       // provenance
};

// For each centroid, finds the nearest static token vector by inner product
// (ties: smaller token id), keeps the num_selected centroids with the highest
// nearest-token IDF (ties: original centroid index).
CollectiveCentroids select_by_idf(const CentroidSet& centroids, const EncodedIndex& index,
                                  const IdfTable& idf, std::size_t num_selected);

// maxsim(q, p) + beta * sum_n weight_n * max_j <centroid_n, p_j>.
double teacher_score(const EncodedQuery& query, const EncodedPassage& passage,
                     const CollectiveCentroids& cc, double beta);

// Seeded uniform sample without replacement of `count` passages from the
// top `pool_depth` of the ranking, excluding positives.
std::vector<PassageId> mine_negatives_from_pool(const Ranking& ranking,
                                                const std::set<PassageId>& positives,
                                                std::size_t count, std::uint64_t seed,
                                                std::size_t pool_depth);

// Hard-negative mining: the pool is the top-100 of the ranking.
std::vector<PassageId> mine_hard_negatives(const Ranking& ranking,
                                           const std::set<PassageId>& positives,
                                           std::size_t count, std::uint64_t seed);

struct TeacherLabelSet {
    QueryId query_id = 0;
    std::vector<PassageId> candidates;  // observed positive first, then negatives
    std::vector<double> teacher_scores;
    RelevanceDistribution target;
    PassageId observed_positive = 0;
};

struct AnnotateParams {
    PrfConfig prf;
    std::size_t negatives_per_query = 8;
    std::uint64_t seed = 1;
    // Pool the negatives come from: the top-100 hard pool, or a stand-in for
    // random sampling at depth 1000.
    std::size_t negative_pool_depth = 100;
};

// Full teacher pass for one query: retrieve (depth >= 100) -> feedback ->
// centroids -> IDF filter -> teacher scores over {observed positive} + mined
// negatives -> softmax target. Centroids are computed once and reused for
// every candidate; only the query itself is newly encoded.
TeacherLabelSet annotate(const EncodedQuery& query, const EncodedIndex& index, const IdfTable& idf,
                         PassageId observed_positive, const std::set<PassageId>& all_positives,
                         const AnnotateParams& params);

// Teacher label TSV: qid pid teacher_score target_prob is_observed_positive,
// grouped by qid, observed positive first, then negatives by descending
// teacher score.
void write_label_file(const std::vector<TeacherLabelSet>& labels, const std::string& path);
std::vector<TeacherLabelSet> read_label_file(const std::string& path);

}  // namespace crank
