#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crank/collective.hpp"
#include "crank/distill.hpp"
#include "crank/evalkit.hpp"
#include "crank/index.hpp"
#include "crank/synthetic.hpp"

namespace crank {

// Pipeline settings, read from a key = value config file with optional
// [section] headers; command-line overrides win over file values. Every
// persisted artifact records config_hash() and the seeds in a .meta sidecar.
struct PipelineConfig {
    // paths
    std::string corpus_path;
    std::string queries_path;
    std::string qrels_path;
    std::string labels_path = "labels.tsv";
    std::string index_dir = "index";
    std::string run_path = "run.trec";
    std::string report_path;
    std::string checkpoint_out = "student.crwt";

    EmbeddingProviderConfig provider;

    std::size_t dim_out = 16;
    std::uint64_t projection_seed = 11;

    PrfConfig prf;
    TrainConfig train;

    std::size_t depth = 1000;
    std::size_t negatives_per_query = 8;
    int binary_cutoff = 2;
    std::uint64_t annotate_seed = 17;
    int threads = 0;  // 0 = runtime default
    std::string tag = "crank";

    static PipelineConfig from_file(const std::string& path);
    void apply(const std::string& key, const std::string& value);
    std::vector<std::string> canonical_lines() const;
    std::string config_hash() const;
    void apply_thread_setting() const;
};

// On-disk index bundle: meta.txt, projection.crwt, passages.emb (encoded
// rows), static.emb (one row per vocabulary token), vocab.tsv
// (id<TAB>surface<TAB>doc_freq).
struct LoadedIndex {
    EncodedIndex index;
    IdfTable idf;
    Vocabulary vocab;
    Projection projection;
    std::size_t passage_count = 0;
};

void persist_index(const std::string& dir, const EncodedIndex& index, const Projection& projection,
                   const Vocabulary& vocab, const Corpus& corpus, const PipelineConfig& cfg);
LoadedIndex load_index(const std::string& dir);

std::vector<EncodedQuery> encode_queries(const QuerySet& queries, const EmbeddingProvider& provider,
                                         const Projection& projection, EncodingCounter& counter);

struct IndexStats {
    std::size_t passage_count = 0;
    std::size_t vocab_size = 0;
    std::uint64_t query_encodings = 0;
    std::uint64_t passage_encodings = 0;
};

struct AnnotateStats {
    std::size_t annotated = 0;
    std::size_t skipped_without_positive = 0;
};

IndexStats cmd_index(const PipelineConfig& cfg);
std::vector<Ranking> cmd_rank(const PipelineConfig& cfg, const std::optional<std::string>& checkpoint,
                              const std::vector<QueryId>& query_filter, std::size_t mrt_repetitions);
AnnotateStats cmd_annotate(const PipelineConfig& cfg);
TrainReport cmd_distill(const PipelineConfig& cfg);
MetricsReport cmd_eval(const PipelineConfig& cfg, const std::string& run_path,
                       const std::string& qrels_path, const std::vector<int>& pr_cutoffs);
SweepResult cmd_sweep(const PipelineConfig& cfg);
SyntheticData cmd_gen_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

// Sidecar writer: path + ".meta" receiving config hash, seeds and any extra
// provenance lines.
void write_meta(const std::string& artifact_path, const PipelineConfig& cfg,
                const std::vector<std::string>& extra = {});

}  // namespace crank
