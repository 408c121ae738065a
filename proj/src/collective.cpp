#include "crank/collective.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace crank {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

}  // namespace

KmeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                    std::uint64_t seed, std::size_t max_iters, double tol) {
    if (points.empty()) throw ValidationError("kmeans over empty point set");
    if (k == 0) throw ValidationError("kmeans requires k >= 1");
    if (k > points.size())
        throw ValidationError("insufficient points: k=" + std::to_string(k) + " > " +
                              std::to_string(points.size()) + " points");
    const std::size_t n = points.size();
    const std::size_t dim = points[0].size();
    for (const auto& p : points)
        if (p.size() != dim) throw ValidationError("kmeans points have mixed dimensions");

    SplitMix64 rng(seed);

    // k-means++ seeding: first uniform, then proportional to squared distance
    // from the nearest chosen centroid. When all remaining distances are zero
    // (duplicate-heavy inputs) fall back to a uniform pick.
    std::vector<std::vector<double>> centroids;
    centroids.reserve(k);
    centroids.push_back(points[rng.next_below(n)]);
    std::vector<double> d2(n);
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) best = std::min(best, sq_dist(points[i], c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centroids.push_back(points[rng.next_below(n)]);
            continue;
        }
        double target = rng.next_double() * total;
        double cum = 0.0;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            cum += d2[i];
            if (cum >= target) {
                pick = i;
                break;
            }
        }
        centroids.push_back(points[pick]);
    }

    KmeansResult result;
    std::vector<std::size_t> assign(n, 0);
    std::vector<std::size_t> cluster_size(k, 0);

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        // Assignment; ties go to the smaller cluster index.
        double sse = 0.0;
        std::fill(cluster_size.begin(), cluster_size.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                double d = sq_dist(points[i], centroids[c]);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            assign[i] = best_c;
            cluster_size[best_c] += 1;
            sse += best;
        }
        result.sse_history.push_back(sse);
        result.iterations = iter + 1;

        // Update.
        std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < dim; ++d) next[assign[i]][d] += points[i][d];
        for (std::size_t c = 0; c < k; ++c) {
            if (cluster_size[c] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d)
                next[c][d] /= static_cast<double>(cluster_size[c]);
        }

        // Empty-cluster repair: re-seed to the point farthest from its
        // centroid, taken from a cluster that can spare one.
        for (std::size_t c = 0; c < k; ++c) {
            if (cluster_size[c] != 0) continue;
            double far_d = -1.0;
            std::size_t far_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (cluster_size[assign[i]] <= 1) continue;
                double d = sq_dist(points[i], next[assign[i]]);
                if (d > far_d) {
                    far_d = d;
                    far_i = i;
                }
            }
            if (far_d < 0.0) {
                next[c] = centroids[c];  // nothing to take; keep the old spot
                continue;
            }
            cluster_size[assign[far_i]] -= 1;
            next[c] = points[far_i];
            assign[far_i] = c;
            cluster_size[c] = 1;
        }

        double movement = 0.0;
        for (std::size_t c = 0; c < k; ++c)
            movement = std::max(movement, std::sqrt(sq_dist(next[c], centroids[c])));
        centroids = std::move(next);
        if (movement < tol) break;
    }

    result.centroids = std::move(centroids);
    return result;
}

CentroidSet extract_centroids(QueryId query_id, const Ranking& ranking, const EncodedIndex& index,
                              const PrfConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    auto feedback = feedback_passages(ranking, cfg.feedback_depth);

    std::vector<std::vector<double>> pool;
    for (PassageId pid : feedback) {
        auto it = index.entries.find(pid);
        if (it == index.entries.end())
            throw ValidationError("feedback passage " + std::to_string(pid) + " not in index");
        const Matrix& rows = it->second.rows;
        for (std::size_t r = 0; r < rows.rows(); ++r)
            pool.emplace_back(rows.row(r), rows.row(r) + rows.cols());
    }
    if (pool.size() < cfg.num_clusters)
        throw ValidationError("only " + std::to_string(pool.size()) +
                              " pooled token rows for " + std::to_string(cfg.num_clusters) +
                              " clusters");

    CentroidSet cs;
    cs.query_id = query_id;
    cs.centroids = kmeans(pool, cfg.num_clusters, seed).centroids;
    return cs;
}

CollectiveCentroids select_by_idf(const CentroidSet& centroids, const EncodedIndex& index,
                                  const IdfTable& idf, std::size_t num_selected) {
    if (index.static_token_vectors.empty())
        throw ValidationError("index has no static token vectors");
    if (num_selected > centroids.centroids.size())
        throw ValidationError("num_selected exceeds centroid count");

    struct Scored {
        std::size_t original_index;
        TokenId token;
        double weight;
    };
    std::vector<Scored> scored;
    scored.reserve(centroids.centroids.size());
    for (std::size_t m = 0; m < centroids.centroids.size(); ++m) {
        const auto& c = centroids.centroids[m];
        double best = -std::numeric_limits<double>::infinity();
        TokenId best_token = 0;
        bool first = true;
        for (const auto& [token, vec] : index.static_token_vectors) {
            double s = dot(c.data(), vec.data(), c.size());
            if (first || s > best) {  // map order is ascending id: ties keep the smaller
                best = s;
                best_token = token;
                first = false;
            }
        }
        scored.push_back({m, best_token, idf.at(best_token)});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.original_index < b.original_index;
    });

    CollectiveCentroids out;
    out.query_id = centroids.query_id;
    for (std::size_t i = 0; i < num_selected; ++i) {
        out.vectors.push_back(centroids.centroids[scored[i].original_index]);
        out.weights.push_back(scored[i].weight);
        out.nearest_tokens.push_back(scored[i].token);
    }
    return out;
}

double teacher_score(const EncodedQuery& query, const EncodedPassage& passage,
                     const CollectiveCentroids& cc, double beta) {
    double score = maxsim(query, passage);
    const std::size_t dim = passage.rows.cols();
    double augmentation = 0.0;
    for (std::size_t n = 0; n < cc.vectors.size(); ++n) {
        if (cc.vectors[n].size() != dim)
            throw ValidationError("centroid dim does not match passage dim");
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < passage.rows.rows(); ++j)
            best = std::max(best, dot(cc.vectors[n].data(), passage.rows.row(j), dim));
        augmentation += cc.weights[n] * best;
    }
    return score + beta * augmentation;
}

std::vector<PassageId> mine_negatives_from_pool(const Ranking& ranking,
                                                const std::set<PassageId>& positives,
                                                std::size_t count, std::uint64_t seed,
                                                std::size_t depth_limit) {
    const std::size_t pool_depth = std::min(depth_limit, ranking.items.size());
    std::vector<PassageId> pool;
    pool.reserve(pool_depth);
    for (std::size_t i = 0; i < pool_depth; ++i) {
        PassageId pid = ranking.items[i].first;
        if (!positives.count(pid)) pool.push_back(pid);
    }
    if (pool.size() < count)
        throw ValidationError("negative pool has " + std::to_string(pool.size()) +
                              " passages after excluding positives, need " +
                              std::to_string(count));

    // Partial Fisher-Yates over the pool.
    SplitMix64 rng(seed);
    std::vector<PassageId> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

std::vector<PassageId> mine_hard_negatives(const Ranking& ranking,
                                           const std::set<PassageId>& positives,
                                           std::size_t count, std::uint64_t seed) {
    return mine_negatives_from_pool(ranking, positives, count, seed, 100);
}

TeacherLabelSet annotate(const EncodedQuery& query, const EncodedIndex& index, const IdfTable& idf,
                         PassageId observed_positive, const std::set<PassageId>& all_positives,
                         const AnnotateParams& params) {
    params.prf.validate();
    if (!index.entries.count(observed_positive))
        throw ValidationError("observed positive " + std::to_string(observed_positive) +
                              " not in index");

    // One ranking pass serves both feedback extraction and negative mining.
    const std::size_t depth =
        std::max(params.negative_pool_depth, params.prf.feedback_depth);
    Ranking ranking = retrieve(query, index, depth);

    std::uint64_t query_seed = mix_seed(params.seed, query.query_id);
    CentroidSet centroids =
        extract_centroids(query.query_id, ranking, index, params.prf, query_seed);
    CollectiveCentroids cc = select_by_idf(centroids, index, idf, params.prf.num_selected);

    std::set<PassageId> exclude = all_positives;
    exclude.insert(observed_positive);
    std::vector<PassageId> negatives =
        mine_negatives_from_pool(ranking, exclude, params.negatives_per_query,
                                 mix_seed(query_seed, 0xA11CE5), params.negative_pool_depth);

    TeacherLabelSet label;
    label.query_id = query.query_id;
    label.observed_positive = observed_positive;
    label.candidates.push_back(observed_positive);

    // Negatives ordered by descending teacher score (ties: ascending pid) so
    // the label file layout is deterministic.
    std::vector<std::pair<PassageId, double>> scored_negatives;
    for (PassageId pid : negatives)
        scored_negatives.emplace_back(
            pid, teacher_score(query, index.entries.at(pid), cc, params.prf.beta));
    std::sort(scored_negatives.begin(), scored_negatives.end(),
              [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
              });

    label.teacher_scores.push_back(
        teacher_score(query, index.entries.at(observed_positive), cc, params.prf.beta));
    for (const auto& [pid, score] : scored_negatives) {
        label.candidates.push_back(pid);
        label.teacher_scores.push_back(score);
    }
    label.target = softmax_distribution(label.candidates, label.teacher_scores);
    return label;
}

void write_label_file(const std::vector<TeacherLabelSet>& labels, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw ValidationError("cannot open " + path + " for writing");
    char sbuf[64], pbuf[64];
    for (const auto& label : labels) {
        for (std::size_t i = 0; i < label.candidates.size(); ++i) {
            std::snprintf(sbuf, sizeof sbuf, "%.9g", label.teacher_scores[i]);
            std::snprintf(pbuf, sizeof pbuf, "%.17g", label.target.probabilities[i]);
            os << label.query_id << '\t' << label.candidates[i] << '\t' << sbuf << '\t' << pbuf
               << '\t' << (label.candidates[i] == label.observed_positive ? 1 : 0) << '\n';
        }
    }
    if (!os) throw std::runtime_error("I/O failure writing " + path);
}

std::vector<TeacherLabelSet> read_label_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open label file " + path);

    std::vector<TeacherLabelSet> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        QueryId qid;
        PassageId pid;
        double score, prob;
        int is_positive;
        if (!(ls >> qid >> pid >> score >> prob >> is_positive))
            throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed label line");
        if (out.empty() || out.back().query_id != qid) {
            out.emplace_back();
            out.back().query_id = qid;
        }
        TeacherLabelSet& label = out.back();
        label.candidates.push_back(pid);
        label.teacher_scores.push_back(score);
        label.target.candidates.push_back(pid);
        label.target.probabilities.push_back(prob);
        if (is_positive) label.observed_positive = pid;
    }
    for (const auto& label : out) {
        double sum = 0.0;
        for (double p : label.target.probabilities) sum += p;
        if (std::abs(sum - 1.0) > 1e-6)
            throw ValidationError(path + ": target probabilities for query " +
                                  std::to_string(label.query_id) + " sum to " +
                                  std::to_string(sum));
    }
    return out;
}

}  // namespace crank
