// crank: late-interaction retrieval with collective teacher labeling.
//
// Subcommands: gen-synthetic, index, rank, annotate, distill, eval, sweep.
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crank/pipeline.hpp"

namespace {

crank::PipelineConfig load_config(const std::string& config_path,
                                  const std::vector<std::string>& overrides) {
    crank::PipelineConfig cfg;
    if (!config_path.empty()) cfg = crank::PipelineConfig::from_file(config_path);
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw crank::ValidationError("override must be key=value, got '" + kv + "'");
        cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crank: collective-teacher late-interaction retrieval pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_path, "pipeline config file (key = value, [sections])");
    app.add_option("-s,--set", overrides, "config override key=value (repeatable)");

    auto* gen = app.add_subcommand("gen-synthetic", "generate the bundled synthetic dataset");
    std::string gen_dir = "data";
    crank::SyntheticSpec spec;
    gen->add_option("-o,--out", gen_dir, "output directory");
    gen->add_option("--seed", spec.seed, "generator seed");
    gen->add_option("--topics", spec.topics, "number of topics");
    gen->add_option("--queries-per-topic", spec.queries_per_topic, "queries per topic");
    gen->add_option("--planted-per-topic", spec.planted_per_topic, "planted positives per topic");
    gen->add_option("--distractors-per-topic", spec.distractors_per_topic,
                    "distractors per topic");
    gen->add_option("--passages", spec.total_passages, "total corpus size");

    auto* index_cmd = app.add_subcommand("index", "encode the corpus and persist the index");

    auto* rank = app.add_subcommand("rank", "brute-force top-k retrieval to a TREC run file");
    std::string rank_checkpoint;
    std::vector<crank::QueryId> rank_filter;
    std::size_t mrt_reps = 0;
    rank->add_option("--checkpoint", rank_checkpoint,
                     "rank under this projection checkpoint (re-encodes the corpus)");
    rank->add_option("--query", rank_filter, "restrict to these query ids");
    rank->add_option("--mrt-repetitions", mrt_reps,
                     "measure mean response time over this many timed passes");

    auto* annotate_cmd =
        app.add_subcommand("annotate", "teacher pass: write soft labels for training queries");

    auto* distill_cmd =
        app.add_subcommand("distill", "train the student projection from teacher labels");

    auto* eval_cmd = app.add_subcommand("eval", "score a run file against qrels");
    std::string eval_run, eval_qrels;
    std::vector<int> pr_cutoffs;
    eval_cmd->add_option("--run", eval_run, "run file (defaults to paths.run)");
    eval_cmd->add_option("--qrels", eval_qrels, "qrels file (defaults to paths.qrels)");
    eval_cmd->add_option("--pr-cutoff", pr_cutoffs,
                         "also emit a precision-recall curve at this grade cutoff (repeatable)");

    auto* sweep_cmd =
        app.add_subcommand("sweep", "one-at-a-time teacher hyperparameter sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        crank::PipelineConfig cfg = load_config(config_path, overrides);

        if (gen->parsed()) {
            crank::SyntheticData data = crank::cmd_gen_synthetic(spec, gen_dir);
            std::cout << "wrote " << data.corpus.size() << " passages, " << data.queries.size()
                      << " queries to " << gen_dir << "\n";
        } else if (index_cmd->parsed()) {
            crank::IndexStats stats = crank::cmd_index(cfg);
            std::cout << "passages " << stats.passage_count << "\nvocabulary " << stats.vocab_size
                      << "\nquery_encodings " << stats.query_encodings << "\npassage_encodings "
                      << stats.passage_encodings << "\n";
        } else if (rank->parsed()) {
            std::optional<std::string> ckpt;
            if (!rank_checkpoint.empty()) ckpt = rank_checkpoint;
            auto rankings = crank::cmd_rank(cfg, ckpt, rank_filter, mrt_reps);
            std::cout << "ranked " << rankings.size() << " queries -> " << cfg.run_path << "\n";
        } else if (annotate_cmd->parsed()) {
            crank::AnnotateStats stats = crank::cmd_annotate(cfg);
            std::cout << "annotated " << stats.annotated << " queries -> " << cfg.labels_path
                      << "\n";
            if (stats.skipped_without_positive)
                std::cout << "skipped " << stats.skipped_without_positive
                          << " queries without an observed positive\n";
        } else if (distill_cmd->parsed()) {
            crank::TrainReport report = crank::cmd_distill(cfg);
            std::printf("trained %zu epochs, %zu steps, loss %.6f -> %.6f\n",
                        report.epoch_mean_loss.size(), report.steps,
                        report.epoch_mean_loss.front(), report.epoch_mean_loss.back());
            std::cout << "checkpoint " << cfg.checkpoint_out << "\n";
        } else if (eval_cmd->parsed()) {
            std::string run = eval_run.empty() ? cfg.run_path : eval_run;
            std::string qrels = eval_qrels.empty() ? cfg.qrels_path : eval_qrels;
            crank::MetricsReport report = crank::cmd_eval(cfg, run, qrels, pr_cutoffs);
            std::printf("queries        %zu\n", report.evaluated_queries);
            std::printf("MRR@10         %.4f\n", report.mrr_at_10);
            std::printf("NDCG@10        %.4f\n", report.ndcg_at_10);
            std::printf("Recall@1000    %.4f\n", report.recall_at_1000);
        } else if (sweep_cmd->parsed()) {
            crank::SweepResult result = crank::cmd_sweep(cfg);
            std::printf("%-16s %4s %4s %4s %5s %9s %10s\n", "varied", "f_db", "clus", "sel",
                        "beta", "NDCG@10", "Recall@1k");
            for (const auto& row : result.rows)
                std::printf("%-16s %4zu %4zu %4zu %5.2f %9.4f %10.4f\n", row.varied.c_str(),
                            row.config.feedback_depth, row.config.num_clusters,
                            row.config.num_selected, row.config.beta, row.ndcg_at_10,
                            row.recall_at_1k);
            for (const auto& warning : result.warnings)
                std::cout << "warning: " << warning << "\n";
            if (!cfg.report_path.empty()) {
                std::ofstream os(cfg.report_path, std::ios::trunc);
                os << "varied\tfeedback_depth\tclusters\tselected\tbeta\tndcg_at_10\t"
                      "recall_at_1k\n";
                char buf[160];
                for (const auto& row : result.rows) {
                    std::snprintf(buf, sizeof buf, "%s\t%zu\t%zu\t%zu\t%g\t%.6f\t%.6f",
                                  row.varied.c_str(), row.config.feedback_depth,
                                  row.config.num_clusters, row.config.num_selected,
                                  row.config.beta, row.ndcg_at_10, row.recall_at_1k);
                    os << buf << '\n';
                }
                crank::write_meta(cfg.report_path, cfg);
            }
        }
        return 0;
    } catch (const crank::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}
