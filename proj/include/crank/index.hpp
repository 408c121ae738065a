#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crank/common.hpp"
#include "crank/embeddings.hpp"
#include "crank/relevance.hpp"
#include "crank/tokens.hpp"

namespace crank {

struct Corpus {
    std::map<PassageId, std::vector<Token>> passages;
    std::unordered_map<TokenId, std::uint32_t> doc_freq;

    std::size_t passage_count() const { return passages.size(); }
};

struct QuerySet {
    std::map<QueryId, std::vector<Token>> queries;
};

// TSV: id<TAB>whitespace-tokenized text. Throws with the line number on
// malformed records.
Corpus read_corpus_tsv(const std::string& path, Vocabulary& vocab);
QuerySet read_queries_tsv(const std::string& path, Vocabulary& vocab);

// idf(t) = ln((N + 1) / (df(t) + 1)); 0 for a token present in every passage.
struct IdfTable {
    std::unordered_map<TokenId, double> values;

    double at(TokenId id) const {
        auto it = values.find(id);
        if (it == values.end()) throw ValidationError("token id missing from IDF table");
        return it->second;
    }
};

IdfTable build_idf(const Corpus& corpus);

struct EncodedIndex {
    std::map<PassageId, EncodedPassage> entries;
    std::size_t dim_out = 0;
    // Projection of each vocabulary token encoded in isolation; used for the
    // centroid -> nearest-token lookup.
    std::map<TokenId, std::vector<double>> static_token_vectors;
};

// Encodes every passage exactly once (counter.passage_encodings += |P|),
// projects by W and normalizes rows. raw_cache, when given, keeps the raw
// matrices for later re-projection (training). The vocabulary supplies
// surfaces for the static token table.
EncodedIndex build_index(const Corpus& corpus, const Vocabulary& vocab,
                         const EmbeddingProvider& provider, const Projection& projection,
                         EncodingCounter& counter,
                         std::map<PassageId, RawEmbeddingMatrix>* raw_cache = nullptr);

struct Ranking {
    QueryId query_id = 0;
    std::vector<std::pair<PassageId, double>> items;  // score desc, pid asc on ties
    std::size_t depth = 0;
};

// Scores every passage in the index against the query, in index iteration
// order. The OpenMP kernel and the serial reference fill identical outputs;
// the serial one is kept for tests and the benchmark.
std::vector<double> score_all(const EncodedQuery& query, const EncodedIndex& index);
std::vector<double> score_all_serial(const EncodedQuery& query, const EncodedIndex& index);

// Exact brute-force top-depth retrieval; ties broken by ascending PassageId.
Ranking retrieve(const EncodedQuery& query, const EncodedIndex& index, std::size_t depth);

// First f_p items of the ranking, order preserved.
std::vector<PassageId> feedback_passages(const Ranking& ranking, std::size_t feedback_depth);

// TREC run format: "qid Q0 pid rank score tag", score with 6 decimals.
void write_trec_run(const std::vector<Ranking>& rankings, const std::string& path,
                    const std::string& tag);
struct TrecRunRow {
    QueryId query_id;
    PassageId passage_id;
    std::size_t rank;
    double score;
};
std::vector<TrecRunRow> read_trec_run(const std::string& path);

}  // namespace crank
