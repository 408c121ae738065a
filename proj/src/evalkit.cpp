#include "crank/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace crank {

bool Qrels::judged_query(QueryId q) const {
    auto it = judgments.lower_bound({q, 0});
    return it != judgments.end() && it->first.first == q;
}

Qrels read_qrels(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open qrels " + path);
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        QueryId qid;
        PassageId pid;
        std::string iteration;
        int grade;
        if (!(ls >> qid >> iteration >> pid >> grade))
            throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed qrels line");
        if (grade < 0 || grade > 3)
            throw ValidationError(path + ":" + std::to_string(line_no) + ": grade " +
                                  std::to_string(grade) + " outside the 0..3 scale");
        qrels.judgments[{qid, pid}] = grade;
    }
    return qrels;
}

void write_qrels(const Qrels& qrels, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw ValidationError("cannot open " + path + " for writing");
    for (const auto& [key, grade] : qrels.judgments)
        os << key.first << " 0 " << key.second << ' ' << grade << '\n';
}

double mrr_at_k(const Ranking& ranking, const Qrels& qrels, std::size_t k, int binary_cutoff) {
    if (k < 1) throw ValidationError("k must be >= 1");
    std::size_t limit = std::min(k, ranking.items.size());
    for (std::size_t i = 0; i < limit; ++i)
        if (qrels.grade(ranking.query_id, ranking.items[i].first) >= binary_cutoff)
            return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

std::optional<double> ndcg_at_k(const Ranking& ranking, const Qrels& qrels, std::size_t k) {
    if (k < 1) throw ValidationError("k must be >= 1");

    std::vector<int> judged_grades;
    auto it = qrels.judgments.lower_bound({ranking.query_id, 0});
    for (; it != qrels.judgments.end() && it->first.first == ranking.query_id; ++it)
        judged_grades.push_back(it->second);
    std::sort(judged_grades.begin(), judged_grades.end(), std::greater<int>());
    if (judged_grades.empty() || judged_grades.front() == 0) return std::nullopt;

    auto gain = [](int grade) { return std::pow(2.0, grade) - 1.0; };
    double dcg = 0.0;
    std::size_t limit = std::min(k, ranking.items.size());
    for (std::size_t i = 0; i < limit; ++i) {
        int grade = qrels.grade(ranking.query_id, ranking.items[i].first);
        if (grade > 0) dcg += gain(grade) / std::log2(static_cast<double>(i + 2));
    }
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, judged_grades.size()); ++i)
        idcg += gain(judged_grades[i]) / std::log2(static_cast<double>(i + 2));
    return dcg / idcg;
}

std::optional<double> recall_at_k(const Ranking& ranking, const Qrels& qrels, std::size_t k,
                                  int binary_cutoff) {
    if (k < 1) throw ValidationError("k must be >= 1");
    std::set<PassageId> relevant;
    auto it = qrels.judgments.lower_bound({ranking.query_id, 0});
    for (; it != qrels.judgments.end() && it->first.first == ranking.query_id; ++it)
        if (it->second >= binary_cutoff) relevant.insert(it->first.second);
    if (relevant.empty()) return std::nullopt;

    std::size_t hits = 0;
    std::size_t limit = std::min(k, ranking.items.size());
    for (std::size_t i = 0; i < limit; ++i)
        if (relevant.count(ranking.items[i].first)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

MetricsReport evaluate_run(const std::vector<Ranking>& rankings, const Qrels& qrels,
                           int binary_cutoff) {
    MetricsReport report;
    double mrr_sum = 0.0, ndcg_sum = 0.0, recall_sum = 0.0;
    std::size_t mrr_n = 0, ndcg_n = 0, recall_n = 0;
    for (const auto& ranking : rankings) {
        if (!qrels.judged_query(ranking.query_id)) continue;
        PerQueryMetrics pq;
        pq.mrr_at_10 = mrr_at_k(ranking, qrels, 10, binary_cutoff);
        pq.ndcg_at_10 = ndcg_at_k(ranking, qrels, 10);
        pq.recall_at_1000 = recall_at_k(ranking, qrels, 1000, binary_cutoff);
        mrr_sum += pq.mrr_at_10;
        ++mrr_n;
        if (pq.ndcg_at_10) {
            ndcg_sum += *pq.ndcg_at_10;
            ++ndcg_n;
        }
        if (pq.recall_at_1000) {
            recall_sum += *pq.recall_at_1000;
            ++recall_n;
        }
        report.per_query.emplace(ranking.query_id, pq);
    }
    if (report.per_query.empty())
        throw ValidationError("run and qrels share no query id");
    report.evaluated_queries = mrr_n;
    report.mrr_at_10 = mrr_sum / static_cast<double>(mrr_n);
    report.ndcg_at_10 = ndcg_n ? ndcg_sum / static_cast<double>(ndcg_n) : 0.0;
    report.recall_at_1000 = recall_n ? recall_sum / static_cast<double>(recall_n) : 0.0;
    return report;
}

double measure_mrt(const std::vector<EncodedQuery>& queries, const EncodedIndex& index,
                   std::size_t depth, std::size_t repetitions) {
    if (repetitions < 1) throw ValidationError("repetitions must be >= 1");
    if (queries.empty()) throw ValidationError("no queries to time");

    auto run_pass = [&]() {
        for (const auto& q : queries) {
            auto scores = score_all_serial(q, index);
            // Top-depth selection is part of the measured query cost.
            std::vector<std::pair<double, PassageId>> top;
            top.reserve(scores.size());
            std::size_t i = 0;
            for (const auto& [pid, ep] : index.entries) {
                (void)ep;
                top.emplace_back(scores[i++], pid);
            }
            std::size_t keep = std::min(depth, top.size());
            std::partial_sort(top.begin(), top.begin() + keep, top.end(),
                              std::greater<std::pair<double, PassageId>>());
        }
    };

    run_pass();  // warm-up, discarded
    auto start = std::chrono::steady_clock::now();
    for (std::size_t r = 0; r < repetitions; ++r) run_pass();
    auto end = std::chrono::steady_clock::now();
    double total_ms = std::chrono::duration<double, std::milli>(end - start).count();
    return total_ms / static_cast<double>(repetitions * queries.size());
}

PrCurve pr_curve(const std::vector<std::pair<double, int>>& scored_grades, int cutoff) {
    if (cutoff < 1 || cutoff > 3) throw ValidationError("pr_curve cutoff must be in {1,2,3}");
    if (scored_grades.empty()) throw ValidationError("pr_curve over no judged passages");

    std::size_t positives = 0;
    for (const auto& [score, grade] : scored_grades) {
        (void)score;
        if (grade >= cutoff) ++positives;
    }
    if (positives == 0)
        throw ValidationError("no positive passages at cutoff " + std::to_string(cutoff));

    std::vector<double> thresholds;
    thresholds.reserve(scored_grades.size());
    for (const auto& [score, grade] : scored_grades) {
        (void)grade;
        thresholds.push_back(score);
    }
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    PrCurve curve;
    curve.cutoff = cutoff;
    for (double threshold : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (const auto& [score, grade] : scored_grades) {
            if (score < threshold) continue;
            if (grade >= cutoff)
                ++tp;
            else
                ++fp;
        }
        double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        double recall = static_cast<double>(tp) / static_cast<double>(positives);
        curve.points.emplace_back(threshold, precision, recall);
    }
    return curve;
}

void write_pr_curve(const PrCurve& curve, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw ValidationError("cannot open " + path + " for writing");
    os << "threshold\tprecision\trecall\n";
    char buf[128];
    for (const auto& [threshold, precision, recall] : curve.points) {
        std::snprintf(buf, sizeof buf, "%.9g\t%.9g\t%.9g", threshold, precision, recall);
        os << buf << '\n';
    }
}

namespace {

// Teacher-score ranking of one query's judged candidates under one config.
Ranking rank_judged_by_teacher(const EncodedQuery& query, const EncodedIndex& index,
                               const IdfTable& idf, const Qrels& qrels, const PrfConfig& cfg,
                               std::uint64_t seed) {
    std::vector<PassageId> judged;
    auto it = qrels.judgments.lower_bound({query.query_id, 0});
    for (; it != qrels.judgments.end() && it->first.first == query.query_id; ++it)
        judged.push_back(it->first.second);

    const std::size_t depth = std::max<std::size_t>(100, cfg.feedback_depth);
    Ranking initial = retrieve(query, index, depth);
    CentroidSet centroids = extract_centroids(query.query_id, initial, index, cfg,
                                              mix_seed(seed, query.query_id));
    CollectiveCentroids cc = select_by_idf(centroids, index, idf, cfg.num_selected);

    std::vector<std::pair<PassageId, double>> items;
    for (PassageId pid : judged) {
        auto entry = index.entries.find(pid);
        if (entry == index.entries.end()) continue;
        items.emplace_back(pid, teacher_score(query, entry->second, cc, cfg.beta));
    }
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Ranking r;
    r.query_id = query.query_id;
    r.depth = items.size();
    r.items = std::move(items);
    return r;
}

SweepRow evaluate_config(const PrfConfig& cfg, const std::string& varied,
                         const std::vector<EncodedQuery>& queries, const EncodedIndex& index,
                         const IdfTable& idf, const Qrels& qrels, std::uint64_t seed,
                         int binary_cutoff) {
    double ndcg_sum = 0.0, recall_sum = 0.0;
    std::size_t ndcg_n = 0, recall_n = 0;
    for (const auto& query : queries) {
        if (!qrels.judged_query(query.query_id)) continue;
        Ranking r = rank_judged_by_teacher(query, index, idf, qrels, cfg, seed);
        if (auto v = ndcg_at_k(r, qrels, 10)) {
            ndcg_sum += *v;
            ++ndcg_n;
        }
        if (auto v = recall_at_k(r, qrels, 1000, binary_cutoff)) {
            recall_sum += *v;
            ++recall_n;
        }
    }
    SweepRow row;
    row.config = cfg;
    row.varied = varied;
    row.ndcg_at_10 = ndcg_n ? ndcg_sum / static_cast<double>(ndcg_n) : 0.0;
    row.recall_at_1k = recall_n ? recall_sum / static_cast<double>(recall_n) : 0.0;
    return row;
}

}  // namespace

SweepResult sweep(const PrfConfig& defaults, const SweepGrid& grid,
                  const std::vector<EncodedQuery>& queries, const EncodedIndex& index,
                  const IdfTable& idf, const Qrels& qrels, std::uint64_t seed,
                  int binary_cutoff) {
    if (queries.empty()) throw ValidationError("sweep over an empty query set");
    defaults.validate();

    SweepResult result;
    auto try_row = [&](const PrfConfig& cfg, const std::string& varied) {
        if (cfg.num_selected > cfg.num_clusters) {
            result.warnings.push_back("skipping " + varied + " variant: num_selected " +
                                      std::to_string(cfg.num_selected) + " > num_clusters " +
                                      std::to_string(cfg.num_clusters));
            return;
        }
        try {
            result.rows.push_back(
                evaluate_config(cfg, varied, queries, index, idf, qrels, seed, binary_cutoff));
        } catch (const ValidationError& e) {
            // A variant can be infeasible for the corpus at hand, e.g. too few
            // pooled feedback tokens for the cluster count.
            result.warnings.push_back("skipping " + varied + " variant: " + std::string(e.what()));
        }
    };

    try_row(defaults, "default");
    for (std::size_t v : grid.feedback_depth) {
        if (v == defaults.feedback_depth) continue;
        PrfConfig cfg = defaults;
        cfg.feedback_depth = v;
        try_row(cfg, "feedback_depth");
    }
    for (std::size_t v : grid.num_clusters) {
        if (v == defaults.num_clusters) continue;
        PrfConfig cfg = defaults;
        cfg.num_clusters = v;
        try_row(cfg, "num_clusters");
    }
    for (std::size_t v : grid.num_selected) {
        if (v == defaults.num_selected) continue;
        PrfConfig cfg = defaults;
        cfg.num_selected = v;
        try_row(cfg, "num_selected");
    }
    for (double v : grid.beta) {
        if (v == defaults.beta) continue;
        PrfConfig cfg = defaults;
        cfg.beta = v;
        try_row(cfg, "beta");
    }
    return result;
}

}  // namespace crank
