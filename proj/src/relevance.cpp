#include "crank/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crank {

Projection Projection::random(std::size_t dim_out, std::size_t dim_in, std::uint64_t seed) {
    if (dim_out == 0 || dim_in == 0) throw ValidationError("projection dims must be positive");
    Projection p;
    p.weights = Matrix(dim_out, dim_in);
    SplitMix64 rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim_in));
    for (auto& w : p.weights.data()) w = rng.next_gaussian() * scale;
    return p;
}

Matrix project_and_normalize(const Projection& projection, const Matrix& raw) {
    if (raw.cols() != projection.dim_in())
        throw ValidationError("projection dim_in " + std::to_string(projection.dim_in()) +
                              " does not match raw dim " + std::to_string(raw.cols()));
    const std::size_t n = raw.rows();
    const std::size_t dout = projection.dim_out();
    const std::size_t din = projection.dim_in();
    Matrix out(n, dout);
    for (std::size_t i = 0; i < n; ++i) {
        const double* u = raw.row(i);
        double* v = out.row(i);
        for (std::size_t o = 0; o < dout; ++o) v[o] = dot(projection.weights.row(o), u, din);
        double norm = l2_norm(v, dout);
        if (norm < 1e-300) throw std::runtime_error("zero-norm projected row");
        for (std::size_t o = 0; o < dout; ++o) v[o] /= norm;
    }
    return out;
}

double maxsim_rows(const Matrix& query_rows, const Matrix& passage_rows) {
    if (query_rows.cols() != passage_rows.cols())
        throw ValidationError("maxsim dim mismatch: " + std::to_string(query_rows.cols()) +
                              " vs " + std::to_string(passage_rows.cols()));
    const std::size_t dim = query_rows.cols();
    double score = 0.0;
    for (std::size_t i = 0; i < query_rows.rows(); ++i) {
        const double* q = query_rows.row(i);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < passage_rows.rows(); ++j) {
            double s = dot(q, passage_rows.row(j), dim);
            if (s > best) best = s;
        }
        score += best;
    }
    return score;
}

double maxsim(const EncodedQuery& query, const EncodedPassage& passage) {
    return maxsim_rows(query.rows, passage.rows);
}

RelevanceDistribution softmax_distribution(const std::vector<PassageId>& candidates,
                                           const std::vector<double>& scores) {
    if (scores.empty()) throw ValidationError("softmax over empty score list");
    if (candidates.size() != scores.size())
        throw ValidationError("softmax candidate/score length mismatch");
    for (double s : scores)
        if (!std::isfinite(s)) throw ValidationError("non-finite score in softmax input");

    double max_score = *std::max_element(scores.begin(), scores.end());
    std::vector<double> probs(scores.size());
    double z = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        probs[i] = std::exp(scores[i] - max_score);
        z += probs[i];
    }
    for (auto& p : probs) p /= z;
    return RelevanceDistribution{candidates, std::move(probs)};
}

double kl_divergence(const RelevanceDistribution& target, const RelevanceDistribution& student) {
    if (target.candidates != student.candidates)
        throw ValidationError("kl_divergence candidate lists are not aligned");
    double kl = 0.0;
    for (std::size_t i = 0; i < target.probabilities.size(); ++i) {
        double t = target.probabilities[i];
        if (t <= 0.0) continue;  // 0 * log(0/s) := 0
        kl += t * std::log(t / student.probabilities[i]);
    }
    return kl;
}

double hard_loss(double positive_score, const std::vector<double>& negative_scores) {
    if (!std::isfinite(positive_score)) throw ValidationError("non-finite positive score");
    double max_score = positive_score;
    for (double s : negative_scores) {
        if (!std::isfinite(s)) throw ValidationError("non-finite negative score");
        max_score = std::max(max_score, s);
    }
    double z = std::exp(positive_score - max_score);
    for (double s : negative_scores) z += std::exp(s - max_score);
    return std::log(z) - (positive_score - max_score);
}

namespace {

// Projected rows with the state needed to backpropagate: pre-normalization
// vectors and their norms.
struct ProjectedRows {
    Matrix unit;            // n x dim_out, normalized
    Matrix raw_projection;  // n x dim_out, before normalization
    std::vector<double> norms;
};

ProjectedRows project_tracked(const Projection& projection, const Matrix& raw) {
    const std::size_t n = raw.rows();
    const std::size_t dout = projection.dim_out();
    const std::size_t din = projection.dim_in();
    if (raw.cols() != din) throw ValidationError("gradient input dim mismatch");
    ProjectedRows out;
    out.unit = Matrix(n, dout);
    out.raw_projection = Matrix(n, dout);
    out.norms.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* u = raw.row(i);
        double* v = out.raw_projection.row(i);
        for (std::size_t o = 0; o < dout; ++o) v[o] = dot(projection.weights.row(o), u, din);
        double norm = l2_norm(v, dout);
        if (norm < 1e-300) throw std::runtime_error("zero-norm projected row");
        out.norms[i] = norm;
        double* y = out.unit.row(i);
        for (std::size_t o = 0; o < dout; ++o) y[o] = v[o] / norm;
    }
    return out;
}

// d(loss)/dW contribution of one row: g is d(loss)/d(unit row); chain through
// y = v/|v| and v = W u.
void backprop_row(const std::vector<double>& g, const ProjectedRows& rows, std::size_t i,
                  const double* raw_row, std::size_t din, Matrix& grad) {
    const std::size_t dout = grad.rows();
    const double* y = rows.unit.row(i);
    double gy = dot(g.data(), y, dout);
    for (std::size_t o = 0; o < dout; ++o) {
        double gv = (g[o] - gy * y[o]) / rows.norms[i];
        if (gv == 0.0) continue;
        double* w = grad.row(o);
        for (std::size_t d = 0; d < din; ++d) w[d] += gv * raw_row[d];
    }
}

}  // namespace

ListwiseGrad grad_kd_loss(const Projection& projection, const RawEmbeddingMatrix& query_raw,
                          const std::vector<RawEmbeddingMatrix>& candidate_raws,
                          const std::vector<double>& target_probs) {
    if (candidate_raws.empty()) throw ValidationError("no candidates for gradient");
    if (candidate_raws.size() != target_probs.size())
        throw ValidationError("target/candidate length mismatch");

    const std::size_t dout = projection.dim_out();
    const std::size_t din = projection.dim_in();
    const std::size_t nq = query_raw.token_count();

    ProjectedRows q = project_tracked(projection, query_raw.values);

    std::vector<ProjectedRows> cands(candidate_raws.size());
    std::vector<std::vector<std::size_t>> argmax(candidate_raws.size());
    std::vector<double> scores(candidate_raws.size());
    for (std::size_t c = 0; c < candidate_raws.size(); ++c) {
        cands[c] = project_tracked(projection, candidate_raws[c].values);
        argmax[c].resize(nq);
        double score = 0.0;
        for (std::size_t i = 0; i < nq; ++i) {
            const double* qi = q.unit.row(i);
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_j = 0;
            for (std::size_t j = 0; j < cands[c].unit.rows(); ++j) {
                double s = dot(qi, cands[c].unit.row(j), dout);
                if (s > best) {  // strict: ties keep the smallest j
                    best = s;
                    best_j = j;
                }
            }
            argmax[c][i] = best_j;
            score += best;
        }
        scores[c] = score;
    }

    // Softmax over candidate scores and the KL/CE loss. With a one-hot
    // target this is exactly the hard loss; the gradient d(loss)/d(score)
    // is softmax - target either way.
    double max_score = *std::max_element(scores.begin(), scores.end());
    std::vector<double> probs(scores.size());
    double z = 0.0;
    for (std::size_t c = 0; c < scores.size(); ++c) {
        probs[c] = std::exp(scores[c] - max_score);
        z += probs[c];
    }
    for (auto& p : probs) p /= z;

    double loss = 0.0;
    for (std::size_t c = 0; c < probs.size(); ++c) {
        double t = target_probs[c];
        if (t > 0.0) loss += t * std::log(t / probs[c]);
    }

    ListwiseGrad out;
    out.loss = loss;
    out.grad = Matrix(dout, din);
    out.scores = scores;
    out.probabilities = probs;

    // Query-row gradients accumulate across candidates before the chain rule;
    // passage rows are local to their candidate.
    std::vector<std::vector<double>> g_query(nq, std::vector<double>(dout, 0.0));
    for (std::size_t c = 0; c < candidate_raws.size(); ++c) {
        double delta = probs[c] - target_probs[c];
        if (delta == 0.0) continue;

        std::vector<std::vector<double>> g_rows(cands[c].unit.rows(),
                                                std::vector<double>(dout, 0.0));
        for (std::size_t i = 0; i < nq; ++i) {
            std::size_t j = argmax[c][i];
            const double* qi = q.unit.row(i);
            const double* pj = cands[c].unit.row(j);
            for (std::size_t o = 0; o < dout; ++o) {
                g_query[i][o] += delta * pj[o];
                g_rows[j][o] += delta * qi[o];
            }
        }
        for (std::size_t j = 0; j < g_rows.size(); ++j) {
            bool nonzero = false;
            for (double v : g_rows[j])
                if (v != 0.0) { nonzero = true; break; }
            if (nonzero)
                backprop_row(g_rows[j], cands[c], j, candidate_raws[c].values.row(j), din,
                             out.grad);
        }
    }
    for (std::size_t i = 0; i < nq; ++i)
        backprop_row(g_query[i], q, i, query_raw.values.row(i), din, out.grad);

    return out;
}

}  // namespace crank
