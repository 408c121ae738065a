#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "crank/evalkit.hpp"
#include "helpers.hpp"

using namespace crank;
namespace th = testing_helpers;

namespace {

Ranking make_ranking(QueryId qid, const std::vector<PassageId>& pids) {
    Ranking r;
    r.query_id = qid;
    r.depth = pids.size();
    double score = static_cast<double>(pids.size());
    for (PassageId p : pids) r.items.emplace_back(p, score--);
    return r;
}

Qrels make_qrels(QueryId qid, const std::map<PassageId, int>& grades) {
    Qrels q;
    for (const auto& [pid, g] : grades) q.judgments[{qid, pid}] = g;
    return q;
}

}  // namespace

TEST_CASE("mrr basics") {
    Qrels qrels = make_qrels(1, {{10, 2}, {20, 1}});
    CHECK(mrr_at_k(make_ranking(1, {10, 5, 6}), qrels, 10, 2) == doctest::Approx(1.0));
    // First passage at or above the cutoff sits at rank 4.
    CHECK(mrr_at_k(make_ranking(1, {5, 6, 7, 10}), qrels, 10, 2) == doctest::Approx(0.25));
    // Relevant at rank 11 is outside k = 10.
    std::vector<PassageId> eleven{1, 2, 3, 4, 5, 6, 7, 8, 9, 11, 10};
    CHECK(mrr_at_k(make_ranking(1, eleven), qrels, 10, 2) == doctest::Approx(0.0));
    // Grade 1 is below cutoff 2 but counts at cutoff 1.
    CHECK(mrr_at_k(make_ranking(1, {20, 10}), qrels, 10, 2) == doctest::Approx(0.5));
    CHECK(mrr_at_k(make_ranking(1, {20, 10}), qrels, 10, 1) == doctest::Approx(1.0));
}

TEST_CASE("ndcg worked example and conventions") {
    // Grades at ranks 1..3 are (0, 3, 1); ideal is (3, 1, 0).
    Qrels qrels = make_qrels(1, {{100, 0}, {200, 3}, {300, 1}});
    auto v = ndcg_at_k(make_ranking(1, {100, 200, 300}), qrels, 3);
    REQUIRE(v.has_value());
    double dcg = 7.0 / std::log2(3.0) + 1.0 / 2.0;
    double idcg = 7.0 + 1.0 / std::log2(3.0);
    CHECK(*v == doctest::Approx(dcg / idcg).epsilon(1e-12));
    CHECK(*v == doctest::Approx(0.6443).epsilon(5e-4));

    // A ranking ordered exactly by descending grade is ideal.
    auto ideal = ndcg_at_k(make_ranking(1, {200, 300, 100}), qrels, 3);
    CHECK(*ideal == doctest::Approx(1.0).epsilon(1e-12));

    // All grades zero: excluded.
    Qrels zeros = make_qrels(1, {{100, 0}, {200, 0}});
    CHECK_FALSE(ndcg_at_k(make_ranking(1, {100, 200}), zeros, 3).has_value());
}

TEST_CASE("recall basics") {
    Qrels qrels = make_qrels(1, {{1, 2}, {2, 2}, {3, 2}, {4, 2}, {9, 1}});
    CHECK(*recall_at_k(make_ranking(1, {1, 2, 7, 8}), qrels, 4, 2) == doctest::Approx(0.5));
    CHECK(*recall_at_k(make_ranking(1, {1, 2, 3, 4}), qrels, 10, 2) == doctest::Approx(1.0));
    // k >= corpus size retrieves everything.
    CHECK(*recall_at_k(make_ranking(1, {5, 6, 1, 2, 3, 4}), qrels, 1000, 2) ==
          doctest::Approx(1.0));
    // No relevant at the cutoff: excluded.
    Qrels low = make_qrels(1, {{1, 1}});
    CHECK_FALSE(recall_at_k(make_ranking(1, {1}), low, 10, 2).has_value());
    // Recall is non-decreasing in k.
    double prev = 0.0;
    for (std::size_t k = 1; k <= 6; ++k) {
        double r = *recall_at_k(make_ranking(1, {9, 1, 5, 2, 3, 4}), qrels, k, 2);
        CHECK(r >= prev);
        prev = r;
    }
}

TEST_CASE("metrics agree with the independent oracle on random judged rankings") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 5 + rng.next_below(20);
        std::vector<PassageId> ranked;
        std::map<PassageId, int> grades;
        bool any_relevant = false;
        for (std::size_t i = 0; i < n; ++i) {
            ranked.push_back(i + 1);
            int g = static_cast<int>(rng.next_below(4));
            if (rng.next_double() < 0.5) {
                grades[i + 1] = g;
                if (g > 0) any_relevant = true;
            }
        }
        if (!any_relevant) grades[1] = 3;

        Qrels qrels = make_qrels(3, grades);
        Ranking ranking = make_ranking(3, ranked);
        std::size_t k = 1 + rng.next_below(10);

        CHECK(mrr_at_k(ranking, qrels, k, 2) ==
              doctest::Approx(th::oracle_mrr(ranked, grades, k, 2)).epsilon(1e-9));
        auto ndcg = ndcg_at_k(ranking, qrels, k);
        REQUIRE(ndcg.has_value());
        CHECK(*ndcg == doctest::Approx(th::oracle_ndcg(ranked, grades, k)).epsilon(1e-9));
        bool has_rel2 = false;
        for (const auto& [pid, g] : grades) has_rel2 |= g >= 2;
        if (has_rel2)
            CHECK(*recall_at_k(ranking, qrels, k, 2) ==
                  doctest::Approx(th::oracle_recall(ranked, grades, k, 2)).epsilon(1e-9));
    }
}

TEST_CASE("metrics ignore permutations of unjudged tail items") {
    Qrels qrels = make_qrels(1, {{10, 3}, {20, 2}});
    Ranking a = make_ranking(1, {10, 20, 5, 6, 7});
    Ranking b = make_ranking(1, {10, 20, 7, 5, 6});
    CHECK(mrr_at_k(a, qrels, 5, 2) == mrr_at_k(b, qrels, 5, 2));
    CHECK(*ndcg_at_k(a, qrels, 5) == *ndcg_at_k(b, qrels, 5));
    CHECK(*recall_at_k(a, qrels, 5, 2) == *recall_at_k(b, qrels, 5, 2));
}

TEST_CASE("evaluate_run aggregates and validates overlap") {
    Qrels qrels;
    qrels.judgments[{1, 10}] = 2;
    qrels.judgments[{2, 20}] = 2;
    qrels.judgments[{2, 21}] = 0;

    std::vector<Ranking> run{make_ranking(1, {10, 11}), make_ranking(2, {22, 20})};
    MetricsReport report = evaluate_run(run, qrels, 2);
    CHECK(report.evaluated_queries == 2);
    CHECK(report.mrr_at_10 == doctest::Approx((1.0 + 0.5) / 2.0));
    CHECK(report.recall_at_1000 == doctest::Approx(1.0));
    CHECK(report.mrt_ms == 0.0);

    std::vector<Ranking> disjoint{make_ranking(9, {1, 2})};
    CHECK_THROWS_AS(evaluate_run(disjoint, qrels, 2), ValidationError);
}

TEST_CASE("qrels parse and write") {
    auto path = (std::filesystem::temp_directory_path() / "crank_qrels_test.txt").string();
    {
        std::ofstream os(path);
        os << "1 0 10 2\n1 0 11 0\n2 0 10 3\n";
    }
    Qrels q = read_qrels(path);
    CHECK(q.grade(1, 10) == 2);
    CHECK(q.grade(1, 11) == 0);
    CHECK(q.grade(1, 999) == 0);  // unjudged defaults to 0
    CHECK(q.grade(2, 10) == 3);
    CHECK(q.judged_query(1));
    CHECK_FALSE(q.judged_query(3));

    write_qrels(q, path);
    Qrels again = read_qrels(path);
    CHECK(again.judgments == q.judgments);

    {
        std::ofstream os(path);
        os << "1 0 10 7\n";
    }
    CHECK_THROWS_AS(read_qrels(path), ValidationError);
    std::filesystem::remove(path);
}

TEST_CASE("pr curve endpoints and monotonicity") {
    // Scores separate grade-3 passages perfectly at the top.
    std::vector<std::pair<double, int>> scored{
        {0.95, 3}, {0.90, 3}, {0.60, 2}, {0.55, 1}, {0.50, 0}, {0.30, 0}, {0.20, 1}, {0.10, 0}};

    PrCurve c1 = pr_curve(scored, 1);
    // Accept-all endpoint: recall 1, precision = base rate (5 of 8 >= 1).
    auto [t0, p0, r0] = c1.points.front();
    CHECK(r0 == doctest::Approx(1.0));
    CHECK(p0 == doctest::Approx(5.0 / 8.0));
    double prev_recall = 2.0;
    for (const auto& [t, p, r] : c1.points) {
        CHECK(r <= prev_recall + 1e-12);
        prev_recall = r;
    }

    PrCurve c3 = pr_curve(scored, 3);
    bool perfect_point = false;
    for (const auto& [t, p, r] : c3.points)
        if (p == doctest::Approx(1.0) && r == doctest::Approx(1.0)) perfect_point = true;
    CHECK(perfect_point);

    CHECK_THROWS_AS(pr_curve({}, 1), ValidationError);
    CHECK_THROWS_AS(pr_curve({{0.5, 0}}, 1), ValidationError);
    CHECK_THROWS_AS(pr_curve(scored, 0), ValidationError);

    auto path = (std::filesystem::temp_directory_path() / "crank_pr_test.tsv").string();
    write_pr_curve(c1, path);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "threshold\tprecision\trecall");
    std::filesystem::remove(path);
}

TEST_CASE("mean response time measurement") {
    Vocabulary vocab;
    std::vector<std::pair<PassageId, std::string>> small_rows, big_rows;
    SplitMix64 rng(3);
    // Sized so a single query costs a few ms: long enough to dominate timer
    // noise, short enough to keep the suite quick.
    auto text = [&]() {
        std::string t;
        for (int i = 0; i < 12; ++i)
            t += (i ? " " : "") + ("w" + std::to_string(rng.next_below(50)));
        return t;
    };
    for (PassageId p = 1; p <= 1500; ++p) small_rows.emplace_back(p, text());
    for (PassageId p = 1; p <= 3000; ++p) big_rows.emplace_back(p, text());

    EmbeddingProviderConfig pcfg;
    pcfg.dim_in = 24;
    pcfg.seed = 7;
    EmbeddingProvider provider(pcfg);
    Projection projection = Projection::random(12, 24, 11);
    EncodingCounter counter;

    Vocabulary vocab_small, vocab_big;
    Corpus small = th::make_corpus(vocab_small, small_rows);
    Corpus big = th::make_corpus(vocab_big, big_rows);
    EncodedIndex small_index = build_index(small, vocab_small, provider, projection, counter);
    EncodedIndex big_index = build_index(big, vocab_big, provider, projection, counter);

    std::vector<EncodedQuery> queries;
    for (QueryId q = 1; q <= 8; ++q) {
        auto tokens = tokenize(text(), vocab_small);
        auto raw = provider.encode(q, tokens, counter, EncodeRole::query);
        queries.push_back({q, project_and_normalize(projection, raw.values)});
    }

    double t_small = measure_mrt(queries, small_index, 10, 5);
    CHECK(t_small >= 0.0);

    // Shallow and deep retrieval share the scoring cost; heap upkeep differs
    // marginally, so the two are within 2x of each other.
    double t_deep = measure_mrt(queries, small_index, 1000, 5);
    CHECK(t_deep < 2.0 * std::max(t_small, 1e-3));
    CHECK(t_small < 2.0 * std::max(t_deep, 1e-3));

    // Doubling the corpus roughly doubles brute-force cost.
    double t_big = measure_mrt(queries, big_index, 10, 5);
    double ratio = t_big / t_small;
    CHECK(ratio > 1.5);
    CHECK(ratio < 3.0);

    CHECK_THROWS_AS(measure_mrt(queries, small_index, 10, 0), ValidationError);
}

TEST_CASE("sweep emits the default row plus one row per off-default value") {
    // Tiny but functional teacher setup.
    Vocabulary vocab;
    std::vector<std::pair<PassageId, std::string>> rows;
    SplitMix64 rng(5);
    for (PassageId p = 1; p <= 120; ++p) {
        // Passages long enough that even a single feedback passage can feed
        // the largest cluster count in the grid.
        std::string t;
        for (int i = 0; i < 26; ++i)
            t += (i ? " " : "") + ("w" + std::to_string(rng.next_below(80)));
        rows.emplace_back(p, t);
    }
    Corpus corpus = th::make_corpus(vocab, rows);
    EmbeddingProviderConfig pcfg;
    pcfg.dim_in = 24;
    pcfg.seed = 7;
    EmbeddingProvider provider(pcfg);
    Projection projection = Projection::random(12, 24, 11);
    EncodingCounter counter;
    EncodedIndex index = build_index(corpus, vocab, provider, projection, counter);
    IdfTable idf = build_idf(corpus);

    Qrels qrels;
    std::vector<EncodedQuery> queries;
    for (QueryId q = 1; q <= 4; ++q) {
        auto tokens = tokenize("w" + std::to_string(q) + " w" + std::to_string(q + 10), vocab);
        auto raw = provider.encode(q, tokens, counter, EncodeRole::query);
        queries.push_back({q, project_and_normalize(projection, raw.values)});
        for (PassageId p = 1; p <= 12; ++p)
            qrels.judgments[{q, p * 9}] = static_cast<int>(rng.next_below(4));
        qrels.judgments[{q, q * 9}] = 3;
    }

    PrfConfig defaults;
    defaults.feedback_depth = 3;
    defaults.num_clusters = 24;
    defaults.num_selected = 10;
    defaults.beta = 1.0;
    SweepGrid grid;

    SweepResult result = sweep(defaults, grid, queries, index, idf, qrels, 5, 2);
    // Grid {1,3,5} x {12,24} x {5,10} x {0.5,1.0} around (3,24,10,1.0):
    // off-default values are f_p in {1,5}, f_c 12, f_e 5, beta 0.5.
    REQUIRE(result.rows.size() == 6);
    CHECK(result.rows[0].varied == "default");
    std::map<std::string, int> varied_counts;
    for (std::size_t i = 1; i < result.rows.size(); ++i) {
        const auto& row = result.rows[i];
        int diffs = 0;
        if (row.config.feedback_depth != defaults.feedback_depth) ++diffs;
        if (row.config.num_clusters != defaults.num_clusters) ++diffs;
        if (row.config.num_selected != defaults.num_selected) ++diffs;
        if (row.config.beta != defaults.beta) ++diffs;
        CHECK(diffs == 1);
        varied_counts[row.varied] += 1;
        CHECK(row.ndcg_at_10 >= 0.0);
        CHECK(row.ndcg_at_10 <= 1.0);
        CHECK(row.recall_at_1k >= 0.0);
        CHECK(row.recall_at_1k <= 1.0);
    }
    CHECK(varied_counts["feedback_depth"] == 2);
    CHECK(varied_counts["num_clusters"] == 1);
    CHECK(varied_counts["num_selected"] == 1);
    CHECK(varied_counts["beta"] == 1);

    // An invalid variant (num_selected > num_clusters) is skipped with a warning.
    PrfConfig tight = defaults;
    tight.num_clusters = 10;
    tight.num_selected = 10;
    SweepGrid tight_grid;
    tight_grid.num_clusters = {8, 10};
    tight_grid.num_selected = {10};
    tight_grid.feedback_depth = {3};
    tight_grid.beta = {1.0};
    SweepResult tight_result = sweep(tight, tight_grid, queries, index, idf, qrels, 5, 2);
    CHECK(tight_result.rows.size() == 1);  // default only; the f_c=8 variant is invalid
    REQUIRE(tight_result.warnings.size() == 1);
    CHECK(tight_result.warnings[0].find("num_clusters") != std::string::npos);
}
