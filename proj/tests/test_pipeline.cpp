#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "crank/pipeline.hpp"
#include "helpers.hpp"

using namespace crank;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("crank_pipeline_" + std::to_string(SplitMix64(std::random_device{}()).next_u64()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& rel) const { return (path / rel).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// Bundled pipeline settings matching the synthetic dataset scale.
PipelineConfig synthetic_config(const TempDir& dir) {
    PipelineConfig cfg;
    cfg.corpus_path = dir.str("data/corpus.tsv");
    cfg.queries_path = dir.str("data/queries.tsv");
    cfg.qrels_path = dir.str("data/qrels_train.txt");
    cfg.labels_path = dir.str("labels.tsv");
    cfg.index_dir = dir.str("index");
    cfg.run_path = dir.str("run.trec");
    cfg.report_path = dir.str("report.tsv");
    cfg.checkpoint_out = dir.str("student.crwt");
    cfg.provider.dim_in = 40;
    cfg.provider.seed = 4;
    cfg.provider.context_window = 1;
    cfg.dim_out = 20;
    cfg.projection_seed = 11;
    cfg.prf.feedback_depth = 3;
    cfg.prf.num_clusters = 24;
    cfg.prf.num_selected = 4;
    cfg.prf.beta = 1.0;
    cfg.train.learning_rate = 0.2;
    cfg.train.epochs = 6;
    cfg.train.seed = 13;
    cfg.depth = 100;
    cfg.negatives_per_query = 16;
    cfg.annotate_seed = 17;
    return cfg;
}

}  // namespace

TEST_CASE("config file parsing, overrides and hashing") {
    TempDir dir;
    auto path = dir.str("pipeline.conf");
    {
        std::ofstream os(path);
        os << "# comment line\n"
           << "[paths]\n"
           << "corpus = data/corpus.tsv\n"
           << "queries = data/queries.tsv\n"
           << "\n[provider]\n"
           << "kind = hashed\n"
           << "dim_in = 48\n"
           << "seed = 9\n"
           << "[prf]\n"
           << "beta = 0.5\n"
           << "[train]\n"
           << "objective = hard_ce\n"
           << "gradient_clip = 2.5\n";
    }
    PipelineConfig cfg = PipelineConfig::from_file(path);
    CHECK(cfg.corpus_path == "data/corpus.tsv");
    CHECK(cfg.provider.dim_in == 48);
    CHECK(cfg.prf.beta == 0.5);
    CHECK(cfg.train.objective == TrainObjective::hard_ce);
    CHECK(cfg.train.gradient_clip.value() == doctest::Approx(2.5));

    // Overrides win over file values.
    cfg.apply("prf.beta", "1.0");
    CHECK(cfg.prf.beta == 1.0);
    CHECK_THROWS_AS(cfg.apply("nonsense.key", "1"), ValidationError);
    CHECK_THROWS_AS(cfg.apply("provider.dim_in", "abc"), ValidationError);

    auto h1 = cfg.config_hash();
    CHECK(h1.size() == 16);
    cfg.prf.beta = 0.75;
    CHECK(cfg.config_hash() != h1);
    cfg.prf.beta = 1.0;
    CHECK(cfg.config_hash() == h1);
}

TEST_CASE("synthetic generator structure and determinism") {
    SyntheticSpec spec;
    SyntheticData a = generate_synthetic(spec);
    SyntheticData b = generate_synthetic(spec);
    CHECK(a.corpus == b.corpus);
    CHECK(a.queries == b.queries);

    CHECK(a.corpus.size() == 500);
    CHECK(a.queries.size() == 50);
    CHECK(a.labeled.size() == 50);
    for (const auto& [qid, pids] : a.planted) CHECK(pids.size() == spec.planted_per_topic);

    // Labeled positives are distinct passages; planted sets never contain
    // the labeled positive.
    std::set<PassageId> labeled_set;
    for (const auto& [qid, pid] : a.labeled) {
        CHECK(labeled_set.insert(pid).second);
        CHECK(a.planted.at(qid).count(pid) == 0);
    }

    SyntheticSpec other = spec;
    other.seed = 2;
    SyntheticData c = generate_synthetic(other);
    CHECK_FALSE(a.corpus == c.corpus);

    SyntheticSpec tiny = spec;
    tiny.total_passages = 10;  // below the structured count
    CHECK_THROWS_AS(generate_synthetic(tiny), ValidationError);
}

TEST_CASE("stages compose end to end on the bundled synthetic dataset") {
    TempDir dir;
    SyntheticSpec spec;
    spec.seed = 21;
    cmd_gen_synthetic(spec, dir.str("data"));
    PipelineConfig cfg = synthetic_config(dir);

    // index
    IndexStats stats = cmd_index(cfg);
    CHECK(stats.passage_count == 500);
    CHECK(stats.passage_encodings == 500);
    CHECK(stats.query_encodings == 0);
    CHECK(stats.vocab_size > 0);

    // Re-running the index stage reproduces byte-identical artifacts.
    std::string passages_blob = slurp(dir.str("index/passages.emb"));
    std::string static_blob = slurp(dir.str("index/static.emb"));
    std::string proj_blob = slurp(dir.str("index/projection.crwt"));
    cmd_index(cfg);
    CHECK(slurp(dir.str("index/passages.emb")) == passages_blob);
    CHECK(slurp(dir.str("index/static.emb")) == static_blob);
    CHECK(slurp(dir.str("index/projection.crwt")) == proj_blob);

    // rank: depth rows per query, descending scores, re-scorable to 6 dp
    auto rankings = cmd_rank(cfg, std::nullopt, {}, 0);
    CHECK(rankings.size() == 50);
    auto rows = read_trec_run(cfg.run_path);
    CHECK(rows.size() == 50 * cfg.depth);

    LoadedIndex loaded = load_index(cfg.index_dir);
    EmbeddingProvider provider(cfg.provider);
    {
        Vocabulary vocab;
        QuerySet queries = read_queries_tsv(cfg.queries_path, vocab);
        EncodingCounter counter;
        auto encoded = encode_queries(queries, provider, loaded.projection, counter);
        std::map<QueryId, const EncodedQuery*> by_id;
        for (const auto& eq : encoded) by_id[eq.query_id] = &eq;
        for (std::size_t i = 0; i < 200; ++i) {
            const auto& row = rows[i * 37 % rows.size()];
            double rescored =
                maxsim(*by_id.at(row.query_id), loaded.index.entries.at(row.passage_id));
            CHECK(std::abs(rescored - row.score) < 5e-7);  // run file keeps 6 decimals
        }
    }

    // annotate: one block per query, deterministic, normalized targets
    AnnotateStats astats = cmd_annotate(cfg);
    CHECK(astats.annotated == 50);
    CHECK(astats.skipped_without_positive == 0);
    std::string labels_blob = slurp(cfg.labels_path);
    cmd_annotate(cfg);
    CHECK(slurp(cfg.labels_path) == labels_blob);

    auto labels = read_label_file(cfg.labels_path);
    CHECK(labels.size() == 50);
    for (const auto& label : labels) {
        CHECK(label.candidates.size() == 1 + cfg.negatives_per_query);
        double sum = 0.0;
        for (double p : label.target.probabilities) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(label.candidates.front() == label.observed_positive);
    }

    // distill: report length equals epochs; lr=0 run returns theta untouched
    TrainReport report = cmd_distill(cfg);
    CHECK(report.epoch_mean_loss.size() == cfg.train.epochs);
    CHECK(report.epoch_mean_loss.back() < report.epoch_mean_loss.front());
    CHECK(fs::exists(cfg.checkpoint_out));
    CHECK(fs::exists(cfg.checkpoint_out + ".meta"));

    PipelineConfig frozen = cfg;
    frozen.train.learning_rate = 0.0;
    frozen.checkpoint_out = dir.str("frozen.crwt");
    cmd_distill(frozen);
    Projection theta = read_checkpoint(dir.str("index/projection.crwt"));
    Projection frozen_student = read_checkpoint(frozen.checkpoint_out);
    CHECK(frozen_student.weights == theta.weights);

    // rank under the student checkpoint, then evaluate both runs
    PipelineConfig student_cfg = cfg;
    student_cfg.run_path = dir.str("run_student.trec");
    auto student_rankings = cmd_rank(student_cfg, cfg.checkpoint_out, {}, 0);
    CHECK(student_rankings.size() == 50);

    MetricsReport eval = cmd_eval(cfg, cfg.run_path, cfg.qrels_path, {});
    CHECK(eval.evaluated_queries == 50);
    CHECK(eval.mrr_at_10 > 0.0);
    MetricsReport eval2 = cmd_eval(cfg, cfg.run_path, cfg.qrels_path, {});
    CHECK(eval2.mrr_at_10 == eval.mrr_at_10);
    CHECK(fs::exists(cfg.report_path));

    // A run that places each query's observed positive at rank 1 evaluates
    // to MRR@10 of exactly 1.
    Qrels train_qrels = read_qrels(cfg.qrels_path);
    std::vector<Ranking> ideal;
    for (auto r : rankings) {
        PassageId positive = 0;
        for (const auto& [key, grade] : train_qrels.judgments)
            if (key.first == r.query_id && grade >= 2) positive = key.second;
        std::vector<std::pair<PassageId, double>> items{{positive, 99.0}};
        for (const auto& [pid, score] : r.items)
            if (pid != positive) items.emplace_back(pid, score - 100.0);
        r.items = std::move(items);
        ideal.push_back(std::move(r));
    }
    write_trec_run(ideal, dir.str("run_ideal.trec"), "ideal");
    MetricsReport perfect = cmd_eval(cfg, dir.str("run_ideal.trec"), cfg.qrels_path, {});
    CHECK(perfect.mrr_at_10 == doctest::Approx(1.0));
}

TEST_CASE("rank honors query filters and rejects unknown ids") {
    TempDir dir;
    SyntheticSpec spec;
    spec.seed = 22;
    cmd_gen_synthetic(spec, dir.str("data"));
    PipelineConfig cfg = synthetic_config(dir);
    cmd_index(cfg);

    auto some = cmd_rank(cfg, std::nullopt, {3, 7}, 0);
    CHECK(some.size() == 2);
    CHECK_THROWS_WITH_AS(cmd_rank(cfg, std::nullopt, {9999}, 0), doctest::Contains("9999"),
                         ValidationError);
}

TEST_CASE("validation failures surface before any work") {
    PipelineConfig cfg;
    cfg.corpus_path = "/nonexistent/corpus.tsv";
    CHECK_THROWS_AS(cmd_index(cfg), ValidationError);
    cfg.corpus_path = "";
    CHECK_THROWS_AS(cmd_index(cfg), ValidationError);
}

TEST_CASE("distill rejects a checkpoint whose dims do not match the provider") {
    TempDir dir;
    SyntheticSpec spec;
    spec.seed = 24;
    spec.topics = 2;
    spec.queries_per_topic = 2;
    spec.total_passages = 140;
    cmd_gen_synthetic(spec, dir.str("data"));
    PipelineConfig cfg = synthetic_config(dir);
    cfg.negatives_per_query = 8;
    cmd_index(cfg);
    cmd_annotate(cfg);

    PipelineConfig mismatched = cfg;
    mismatched.provider.dim_in = 48;  // index checkpoint was built at 40
    CHECK_THROWS_AS(cmd_distill(mismatched), ValidationError);
}

TEST_CASE("queries without positives are skipped with a warning count") {
    TempDir dir;
    SyntheticSpec spec;
    spec.seed = 23;
    cmd_gen_synthetic(spec, dir.str("data"));
    PipelineConfig cfg = synthetic_config(dir);
    cmd_index(cfg);

    // Rewrite the train qrels to drop judgments for queries 1-5.
    Qrels qrels = read_qrels(cfg.qrels_path);
    Qrels pruned;
    for (const auto& [key, grade] : qrels.judgments)
        if (key.first > 5) pruned.judgments[key] = grade;
    write_qrels(pruned, cfg.qrels_path);

    AnnotateStats stats = cmd_annotate(cfg);
    CHECK(stats.annotated == 45);
    CHECK(stats.skipped_without_positive == 5);
}

#ifdef CRANK_CLI_PATH
TEST_CASE("cli exit codes distinguish success and validation errors") {
    TempDir dir;
    std::string cli = CRANK_CLI_PATH;
    std::string gen = cli + " gen-synthetic -o " + dir.str("data") + " --seed 5 > /dev/null 2>&1";
    CHECK(std::system(gen.c_str()) == 0);
    CHECK(fs::exists(dir.str("data/corpus.tsv")));
    CHECK(fs::exists(dir.str("data/queries.tsv")));
    CHECK(fs::exists(dir.str("data/qrels_train.txt")));
    CHECK(fs::exists(dir.str("data/qrels_planted.txt")));

    // Missing corpus: validation error -> exit code 1.
    std::string bad = cli + " index -s paths.corpus=/nope.tsv -s paths.index_dir=" +
                      dir.str("idx") + " > /dev/null 2>&1";
    int rc = std::system(bad.c_str());
    CHECK(WEXITSTATUS(rc) == 1);

    // Unknown config key: also a validation error.
    std::string unknown = cli + " index -s bogus.key=1 > /dev/null 2>&1";
    rc = std::system(unknown.c_str());
    CHECK(WEXITSTATUS(rc) == 1);

    // Full tiny pipeline through the binary.
    std::string conf = dir.str("pipe.conf");
    {
        std::ofstream os(conf);
        os << "[paths]\n"
           << "corpus = " << dir.str("data/corpus.tsv") << "\n"
           << "queries = " << dir.str("data/queries.tsv") << "\n"
           << "qrels = " << dir.str("data/qrels_train.txt") << "\n"
           << "labels = " << dir.str("labels.tsv") << "\n"
           << "index_dir = " << dir.str("index") << "\n"
           << "run = " << dir.str("run.trec") << "\n"
           << "checkpoint_out = " << dir.str("student.crwt") << "\n"
           << "[provider]\ndim_in = 40\nseed = 4\n"
           << "[projection]\ndim_out = 20\n"
           << "[prf]\nselected = 4\n"
           << "[train]\nepochs = 2\nlearning_rate = 0.2\n"
           << "[run]\ndepth = 100\nnegatives_per_query = 8\n";
    }
    for (std::string sub : {"index", "rank", "annotate", "distill"}) {
        std::string cmd = cli + " -c " + conf + " " + sub + " > /dev/null 2>&1";
        CHECK(std::system(cmd.c_str()) == 0);
    }
    std::string eval_cmd = cli + " -c " + conf + " eval > /dev/null 2>&1";
    CHECK(std::system(eval_cmd.c_str()) == 0);
}
#endif
