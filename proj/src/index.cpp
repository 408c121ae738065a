#include "crank/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace crank {

namespace {

// Shared TSV reader for corpus and query files: id<TAB>text per line.
template <typename Insert>
void read_id_text_tsv(const std::string& path, const Insert& insert) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ValidationError(path + ":" + std::to_string(line_no) + ": missing tab separator");
        std::uint64_t id = 0;
        try {
            std::size_t used = 0;
            id = std::stoull(line.substr(0, tab), &used);
            if (used != tab) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed id field");
        }
        std::string text = line.substr(tab + 1);
        if (split_lowercase(text).empty())
            throw ValidationError(path + ":" + std::to_string(line_no) + ": empty text field");
        insert(id, text, line_no);
    }
}

}  // namespace

Corpus read_corpus_tsv(const std::string& path, Vocabulary& vocab) {
    Corpus corpus;
    read_id_text_tsv(path, [&](std::uint64_t id, const std::string& text, std::size_t line_no) {
        if (corpus.passages.count(id))
            throw ValidationError(path + ":" + std::to_string(line_no) + ": duplicate passage id " +
                                  std::to_string(id));
        auto tokens = tokenize(text, vocab);
        std::set<TokenId> distinct;
        for (const auto& t : tokens) distinct.insert(t.id);
        for (TokenId t : distinct) corpus.doc_freq[t] += 1;
        corpus.passages.emplace(id, std::move(tokens));
    });
    if (corpus.passages.empty()) throw ValidationError(path + ": empty corpus");
    return corpus;
}

QuerySet read_queries_tsv(const std::string& path, Vocabulary& vocab) {
    QuerySet qs;
    read_id_text_tsv(path, [&](std::uint64_t id, const std::string& text, std::size_t line_no) {
        if (qs.queries.count(id))
            throw ValidationError(path + ":" + std::to_string(line_no) + ": duplicate query id " +
                                  std::to_string(id));
        qs.queries.emplace(id, tokenize(text, vocab));
    });
    if (qs.queries.empty()) throw ValidationError(path + ": empty query file");
    return qs;
}

IdfTable build_idf(const Corpus& corpus) {
    if (corpus.passages.empty()) throw ValidationError("cannot build IDF over an empty corpus");
    IdfTable table;
    const double n = static_cast<double>(corpus.passage_count());
    for (const auto& [token, df] : corpus.doc_freq)
        table.values[token] = std::log((n + 1.0) / (static_cast<double>(df) + 1.0));
    return table;
}

EncodedIndex build_index(const Corpus& corpus, const Vocabulary& vocab,
                         const EmbeddingProvider& provider, const Projection& projection,
                         EncodingCounter& counter,
                         std::map<PassageId, RawEmbeddingMatrix>* raw_cache) {
    if (projection.dim_in() != provider.dim_in())
        throw ValidationError("projection dim_in does not match provider dim_in");

    EncodedIndex index;
    index.dim_out = projection.dim_out();
    for (const auto& [pid, tokens] : corpus.passages) {
        RawEmbeddingMatrix raw = provider.encode(pid, tokens, counter, EncodeRole::passage);
        EncodedPassage ep;
        ep.passage_id = pid;
        ep.rows = project_and_normalize(projection, raw.values);
        index.entries.emplace(pid, std::move(ep));
        if (raw_cache) raw_cache->emplace(pid, std::move(raw));
    }

    // One context-free vector per vocabulary token, for the centroid ->
    // nearest-token lookup. Index-side bookkeeping, not billed to the
    // encoding counter.
    for (const auto& [token_id, df] : corpus.doc_freq) {
        (void)df;
        Token t;
        t.id = token_id;
        t.surface = vocab.surface_of(token_id);
        std::vector<double> base = provider.encode_token_isolated(t);
        Matrix raw(1, base.size());
        std::copy(base.begin(), base.end(), raw.row(0));
        Matrix unit = project_and_normalize(projection, raw);
        index.static_token_vectors.emplace(
            token_id, std::vector<double>(unit.row(0), unit.row(0) + unit.cols()));
    }
    return index;
}

std::vector<double> score_all_serial(const EncodedQuery& query, const EncodedIndex& index) {
    std::vector<const EncodedPassage*> order;
    order.reserve(index.entries.size());
    for (const auto& [pid, ep] : index.entries) order.push_back(&ep);
    std::vector<double> scores(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        scores[i] = maxsim_rows(query.rows, order[i]->rows);
    return scores;
}

std::vector<double> score_all(const EncodedQuery& query, const EncodedIndex& index) {
    std::vector<const EncodedPassage*> order;
    order.reserve(index.entries.size());
    for (const auto& [pid, ep] : index.entries) order.push_back(&ep);
    std::vector<double> scores(order.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(order.size()); ++i)
        scores[i] = maxsim_rows(query.rows, order[i]->rows);
    return scores;
}

namespace {

Ranking make_ranking(const EncodedQuery& query, const EncodedIndex& index,
                     const std::vector<double>& scores, std::size_t depth) {
    std::vector<std::pair<PassageId, double>> items;
    items.reserve(scores.size());
    std::size_t i = 0;
    for (const auto& [pid, ep] : index.entries) items.emplace_back(pid, scores[i++]);

    auto better = [](const std::pair<PassageId, double>& a, const std::pair<PassageId, double>& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    };
    std::size_t keep = std::min(depth, items.size());
    std::partial_sort(items.begin(), items.begin() + keep, items.end(), better);
    items.resize(keep);

    Ranking r;
    r.query_id = query.query_id;
    r.items = std::move(items);
    r.depth = depth;
    return r;
}

}  // namespace

Ranking retrieve(const EncodedQuery& query, const EncodedIndex& index, std::size_t depth) {
    if (depth < 1) throw ValidationError("retrieval depth must be >= 1");
    if (query.rows.cols() != index.dim_out)
        throw ValidationError("query dim does not match index dim");
    return make_ranking(query, index, score_all(query, index), depth);
}

std::vector<PassageId> feedback_passages(const Ranking& ranking, std::size_t feedback_depth) {
    if (feedback_depth == 0) throw ValidationError("feedback depth must be >= 1");
    if (feedback_depth > ranking.items.size())
        throw ValidationError("feedback depth " + std::to_string(feedback_depth) +
                              " exceeds ranking length " + std::to_string(ranking.items.size()));
    std::vector<PassageId> out;
    out.reserve(feedback_depth);
    for (std::size_t i = 0; i < feedback_depth; ++i) out.push_back(ranking.items[i].first);
    return out;
}

void write_trec_run(const std::vector<Ranking>& rankings, const std::string& path,
                    const std::string& tag) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw ValidationError("cannot open " + path + " for writing");
    char buf[64];
    for (const auto& r : rankings) {
        std::size_t rank = 1;
        for (const auto& [pid, score] : r.items) {
            std::snprintf(buf, sizeof buf, "%.6f", score);
            os << r.query_id << " Q0 " << pid << ' ' << rank << ' ' << buf << ' ' << tag << '\n';
            ++rank;
        }
    }
    if (!os) throw std::runtime_error("I/O failure writing " + path);
}

std::vector<TrecRunRow> read_trec_run(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open run file " + path);
    std::vector<TrecRunRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        TrecRunRow row;
        std::string q0, tag;
        if (!(ls >> row.query_id >> q0 >> row.passage_id >> row.rank >> row.score >> tag))
            throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed run line");
        rows.push_back(row);
    }
    return rows;
}

}  // namespace crank
