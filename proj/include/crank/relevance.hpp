#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crank/common.hpp"
#include "crank/embeddings.hpp"

namespace crank {

// The trainable linear map. The only trainable parameters in the engine.
struct Projection {
    Matrix weights;  // dim_out x dim_in

    std::size_t dim_out() const { return weights.rows(); }
    std::size_t dim_in() const { return weights.cols(); }

    // Seeded Gaussian entries scaled by 1/sqrt(dim_in) so projected rows of
    // unit inputs land near unit norm.
    static Projection random(std::size_t dim_out, std::size_t dim_in, std::uint64_t seed);
};

struct EncodedQuery {
    QueryId query_id = 0;
    Matrix rows;  // |q| x dim_out, unit rows
};

struct EncodedPassage {
    PassageId passage_id = 0;
    Matrix rows;  // |p| x dim_out, unit rows
};

// Projects every row by W and L2-normalizes. Throws on a zero-norm row.
Matrix project_and_normalize(const Projection& projection, const Matrix& raw);

// Softmax probabilities over an explicit candidate list.
struct RelevanceDistribution {
    std::vector<PassageId> candidates;
    std::vector<double> probabilities;
};

// Sum over query rows of the max inner product over passage rows.
double maxsim(const EncodedQuery& query, const EncodedPassage& passage);
double maxsim_rows(const Matrix& query_rows, const Matrix& passage_rows);

RelevanceDistribution softmax_distribution(const std::vector<PassageId>& candidates,
                                           const std::vector<double>& scores);

// KL(target || student) over aligned candidate lists; >= 0.
double kl_divergence(const RelevanceDistribution& target, const RelevanceDistribution& student);

// -log softmax probability of the positive among {positive} + negatives.
double hard_loss(double positive_score, const std::vector<double>& negative_scores);

// Frozen copy of a projection, used to initialize students.
struct ParameterSnapshot {
    Projection projection;
    std::string label;
};

struct ListwiseGrad {
    double loss = 0.0;
    Matrix grad;                       // dim_out x dim_in
    std::vector<double> scores;        // student maxsim per candidate
    std::vector<double> probabilities; // student softmax per candidate
};

// Loss and analytic d(loss)/dW for a listwise softmax objective over one
// query's candidates. target_probs is any distribution over the candidates:
// a teacher target gives the KL objective, a one-hot vector the hard loss
// (the two differ only by the constant target entropy).
//
// Backpropagates through softmax, the per-query-token max (subgradient at
// the smallest argmax index on ties), row L2 normalization, and W.
ListwiseGrad grad_kd_loss(const Projection& projection, const RawEmbeddingMatrix& query_raw,
                          const std::vector<RawEmbeddingMatrix>& candidate_raws,
                          const std::vector<double>& target_probs);

}  // namespace crank
