// Shared builders and independent oracles for the test suites. Oracles here
// are deliberately written as plain, separate implementations of the same
// contracts, so the library is checked against a second route.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "crank/collective.hpp"
#include "crank/evalkit.hpp"
#include "crank/index.hpp"
#include "crank/relevance.hpp"

namespace testing_helpers {

inline std::vector<crank::Token> toks(crank::Vocabulary& vocab, const std::string& text) {
    return crank::tokenize(text, vocab);
}

inline crank::Corpus make_corpus(crank::Vocabulary& vocab,
                                 const std::vector<std::pair<crank::PassageId, std::string>>& rows) {
    crank::Corpus corpus;
    for (const auto& [pid, text] : rows) {
        auto tokens = crank::tokenize(text, vocab);
        std::set<crank::TokenId> distinct;
        for (const auto& t : tokens) distinct.insert(t.id);
        for (crank::TokenId t : distinct) corpus.doc_freq[t] += 1;
        corpus.passages.emplace(pid, std::move(tokens));
    }
    return corpus;
}

inline crank::Matrix rows_matrix(const std::vector<std::vector<double>>& rows) {
    crank::Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

inline crank::EncodedQuery make_query(crank::QueryId id,
                                      const std::vector<std::vector<double>>& rows) {
    return crank::EncodedQuery{id, rows_matrix(rows)};
}

inline crank::EncodedPassage make_passage(crank::PassageId id,
                                          const std::vector<std::vector<double>>& rows) {
    return crank::EncodedPassage{id, rows_matrix(rows)};
}

inline std::vector<double> random_unit_vector(crank::SplitMix64& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm2 = 0.0;
    for (auto& x : v) {
        x = rng.next_gaussian();
        norm2 += x * x;
    }
    double norm = std::sqrt(norm2);
    for (auto& x : v) x /= norm;
    return v;
}

inline std::vector<std::vector<double>> random_unit_rows(crank::SplitMix64& rng, std::size_t n,
                                                         std::size_t dim) {
    std::vector<std::vector<double>> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rows.push_back(random_unit_vector(rng, dim));
    return rows;
}

// ---- oracle: plain double-loop MaxSim ----
inline double oracle_maxsim(const std::vector<std::vector<double>>& q,
                            const std::vector<std::vector<double>>& p) {
    double total = 0.0;
    for (const auto& qi : q) {
        double best = -1e300;
        for (const auto& pj : p) {
            double s = 0.0;
            for (std::size_t d = 0; d < qi.size(); ++d) s += qi[d] * pj[d];
            if (s > best) best = s;
        }
        total += best;
    }
    return total;
}

// ---- oracle: score every passage, sort by (score desc, pid asc) ----
inline std::vector<std::pair<crank::PassageId, double>> oracle_retrieve(
    const crank::EncodedQuery& query, const crank::EncodedIndex& index, std::size_t depth) {
    std::vector<std::pair<crank::PassageId, double>> all;
    for (const auto& [pid, ep] : index.entries) {
        std::vector<std::vector<double>> q, p;
        for (std::size_t i = 0; i < query.rows.rows(); ++i)
            q.emplace_back(query.rows.row(i), query.rows.row(i) + query.rows.cols());
        for (std::size_t j = 0; j < ep.rows.rows(); ++j)
            p.emplace_back(ep.rows.row(j), ep.rows.row(j) + ep.rows.cols());
        all.emplace_back(pid, oracle_maxsim(q, p));
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (all.size() > depth) all.resize(depth);
    return all;
}

// ---- oracle metrics over explicit (pid, grade-lookup) rankings ----
inline double oracle_mrr(const std::vector<crank::PassageId>& ranked,
                         const std::map<crank::PassageId, int>& grades, std::size_t k,
                         int cutoff) {
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        auto it = grades.find(ranked[i]);
        if (it != grades.end() && it->second >= cutoff)
            return 1.0 / static_cast<double>(i + 1);
    }
    return 0.0;
}

inline double oracle_recall(const std::vector<crank::PassageId>& ranked,
                            const std::map<crank::PassageId, int>& grades, std::size_t k,
                            int cutoff) {
    std::size_t relevant = 0, hit = 0;
    for (const auto& [pid, g] : grades)
        if (g >= cutoff) ++relevant;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        auto it = grades.find(ranked[i]);
        if (it != grades.end() && it->second >= cutoff) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(relevant);
}

inline double oracle_ndcg(const std::vector<crank::PassageId>& ranked,
                          const std::map<crank::PassageId, int>& grades, std::size_t k) {
    double dcg = 0.0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        auto it = grades.find(ranked[i]);
        int g = it == grades.end() ? 0 : it->second;
        dcg += (std::pow(2.0, g) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    std::vector<int> ideal;
    for (const auto& [pid, g] : grades) ideal.push_back(g);
    std::sort(ideal.begin(), ideal.end(), std::greater<int>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < ideal.size() && i < k; ++i)
        idcg += (std::pow(2.0, ideal[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    return dcg / idcg;
}

// Test-local listwise loss evaluated by composing library primitives; the
// finite-difference gradient oracle perturbs W through this function.
inline double listwise_loss_at(const crank::Projection& w, const crank::RawEmbeddingMatrix& query,
                               const std::vector<crank::RawEmbeddingMatrix>& candidates,
                               const std::vector<double>& target) {
    crank::Matrix q = crank::project_and_normalize(w, query.values);
    std::vector<double> scores;
    for (const auto& c : candidates)
        scores.push_back(crank::maxsim_rows(q, crank::project_and_normalize(w, c.values)));
    double max_s = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double s : scores) z += std::exp(s - max_s);
    double loss = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (target[i] <= 0.0) continue;
        double log_prob = (scores[i] - max_s) - std::log(z);
        loss += target[i] * (std::log(target[i]) - log_prob);
    }
    return loss;
}

inline crank::Matrix finite_difference_grad(const crank::Projection& w,
                                            const crank::RawEmbeddingMatrix& query,
                                            const std::vector<crank::RawEmbeddingMatrix>& candidates,
                                            const std::vector<double>& target, double step) {
    crank::Matrix grad(w.dim_out(), w.dim_in());
    crank::Projection probe = w;
    for (std::size_t r = 0; r < w.dim_out(); ++r)
        for (std::size_t c = 0; c < w.dim_in(); ++c) {
            double original = probe.weights(r, c);
            probe.weights(r, c) = original + step;
            double up = listwise_loss_at(probe, query, candidates, target);
            probe.weights(r, c) = original - step;
            double down = listwise_loss_at(probe, query, candidates, target);
            probe.weights(r, c) = original;
            grad(r, c) = (up - down) / (2.0 * step);
        }
    return grad;
}

inline double max_relative_error(const crank::Matrix& analytic, const crank::Matrix& numeric,
                                 double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.data().size(); ++i) {
        double a = analytic.data()[i];
        double b = numeric.data()[i];
        double rel = std::abs(a - b) / std::max(std::abs(b), floor);
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace testing_helpers
