#include "crank/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace crank {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        std::uint64_t v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key " + key + ": expected an integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key " + key + ": expected a number, got '" + value + "'");
    }
}

}  // namespace

void PipelineConfig::apply(const std::string& key, const std::string& value) {
    if (key == "paths.corpus") corpus_path = value;
    else if (key == "paths.queries") queries_path = value;
    else if (key == "paths.qrels") qrels_path = value;
    else if (key == "paths.labels") labels_path = value;
    else if (key == "paths.index_dir") index_dir = value;
    else if (key == "paths.run") run_path = value;
    else if (key == "paths.report") report_path = value;
    else if (key == "paths.checkpoint_out") checkpoint_out = value;
    else if (key == "provider.kind") {
        if (value == "hashed") provider.kind = ProviderKind::hashed_deterministic;
        else if (value == "file") provider.kind = ProviderKind::file_backed;
        else throw ValidationError("provider.kind must be 'hashed' or 'file', got '" + value + "'");
    } else if (key == "provider.dim_in") provider.dim_in = parse_u64(key, value);
    else if (key == "provider.seed") provider.seed = parse_u64(key, value);
    else if (key == "provider.context_window") provider.context_window = parse_u64(key, value);
    else if (key == "provider.path") provider.path = value;
    else if (key == "projection.dim_out") dim_out = parse_u64(key, value);
    else if (key == "projection.seed") projection_seed = parse_u64(key, value);
    else if (key == "prf.feedback_depth") prf.feedback_depth = parse_u64(key, value);
    else if (key == "prf.clusters") prf.num_clusters = parse_u64(key, value);
    else if (key == "prf.selected") prf.num_selected = parse_u64(key, value);
    else if (key == "prf.beta") prf.beta = parse_double(key, value);
    else if (key == "train.learning_rate") train.learning_rate = parse_double(key, value);
    else if (key == "train.epochs") train.epochs = parse_u64(key, value);
    else if (key == "train.seed") train.seed = parse_u64(key, value);
    else if (key == "train.objective") {
        if (value == "kd_kl") train.objective = TrainObjective::kd_kl;
        else if (value == "hard_ce") train.objective = TrainObjective::hard_ce;
        else throw ValidationError("train.objective must be 'kd_kl' or 'hard_ce'");
    } else if (key == "train.negatives") {
        if (value == "top100_hard") train.negatives_source = NegativesSource::top100_hard;
        else if (value == "bm25_like_random")
            train.negatives_source = NegativesSource::bm25_like_random;
        else throw ValidationError("train.negatives must be 'top100_hard' or 'bm25_like_random'");
    } else if (key == "train.gradient_clip") {
        if (value.empty() || value == "none") train.gradient_clip.reset();
        else train.gradient_clip = parse_double(key, value);
    } else if (key == "run.depth") depth = parse_u64(key, value);
    else if (key == "run.negatives_per_query") negatives_per_query = parse_u64(key, value);
    else if (key == "run.binary_cutoff") binary_cutoff = static_cast<int>(parse_u64(key, value));
    else if (key == "run.seed") annotate_seed = parse_u64(key, value);
    else if (key == "run.threads") threads = static_cast<int>(parse_u64(key, value));
    else if (key == "run.tag") tag = value;
    else throw ValidationError("unknown config key: " + key);
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open config file " + path);
    PipelineConfig cfg;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        cfg.apply(section.empty() ? key : section + "." + key, value);
    }
    return cfg;
}

std::vector<std::string> PipelineConfig::canonical_lines() const {
    char num[64];
    auto fmt = [&](double v) {
        std::snprintf(num, sizeof num, "%.9g", v);
        return std::string(num);
    };
    std::vector<std::string> lines{
        "paths.corpus=" + corpus_path,
        "paths.queries=" + queries_path,
        "paths.qrels=" + qrels_path,
        "paths.labels=" + labels_path,
        "paths.index_dir=" + index_dir,
        "paths.run=" + run_path,
        "paths.report=" + report_path,
        "paths.checkpoint_out=" + checkpoint_out,
        std::string("provider.kind=") +
            (provider.kind == ProviderKind::hashed_deterministic ? "hashed" : "file"),
        "provider.dim_in=" + std::to_string(provider.dim_in),
        "provider.seed=" + std::to_string(provider.seed),
        "provider.context_window=" + std::to_string(provider.context_window),
        "provider.path=" + provider.path,
        "projection.dim_out=" + std::to_string(dim_out),
        "projection.seed=" + std::to_string(projection_seed),
        "prf.feedback_depth=" + std::to_string(prf.feedback_depth),
        "prf.clusters=" + std::to_string(prf.num_clusters),
        "prf.selected=" + std::to_string(prf.num_selected),
        "prf.beta=" + fmt(prf.beta),
        "train.learning_rate=" + fmt(train.learning_rate),
        "train.epochs=" + std::to_string(train.epochs),
        "train.seed=" + std::to_string(train.seed),
        std::string("train.objective=") +
            (train.objective == TrainObjective::kd_kl ? "kd_kl" : "hard_ce"),
        std::string("train.negatives=") +
            (train.negatives_source == NegativesSource::top100_hard ? "top100_hard"
                                                                    : "bm25_like_random"),
        "train.gradient_clip=" + (train.gradient_clip ? fmt(*train.gradient_clip)
                                                      : std::string("none")),
        "run.depth=" + std::to_string(depth),
        "run.negatives_per_query=" + std::to_string(negatives_per_query),
        "run.binary_cutoff=" + std::to_string(binary_cutoff),
        "run.seed=" + std::to_string(annotate_seed),
        "run.threads=" + std::to_string(threads),
        "run.tag=" + tag,
    };
    return lines;
}

std::string PipelineConfig::config_hash() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const auto& line : canonical_lines()) {
        for (unsigned char c : line) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        h ^= '\n';
        h *= 0x100000001B3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void PipelineConfig::apply_thread_setting() const {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif
}

void write_meta(const std::string& artifact_path, const PipelineConfig& cfg,
                const std::vector<std::string>& extra) {
    std::ofstream os(artifact_path + ".meta", std::ios::trunc);
    if (!os) throw ValidationError("cannot write sidecar for " + artifact_path);
    os << "config_hash=" << cfg.config_hash() << '\n';
    os << "provider_seed=" << cfg.provider.seed << '\n';
    os << "projection_seed=" << cfg.projection_seed << '\n';
    os << "train_seed=" << cfg.train.seed << '\n';
    os << "annotate_seed=" << cfg.annotate_seed << '\n';
    os << "threads=" << cfg.threads << '\n';
    for (const auto& line : extra) os << line << '\n';
}

void persist_index(const std::string& dir, const EncodedIndex& index, const Projection& projection,
                   const Vocabulary& vocab, const Corpus& corpus, const PipelineConfig& cfg) {
    std::filesystem::create_directories(dir);

    std::vector<std::pair<std::uint64_t, RawEmbeddingMatrix>> encoded;
    encoded.reserve(index.entries.size());
    for (const auto& [pid, ep] : index.entries) {
        RawEmbeddingMatrix m;
        m.values = ep.rows;
        encoded.emplace_back(pid, std::move(m));
    }
    write_embedding_file(encoded, dir + "/passages.emb", index.dim_out);

    std::vector<std::pair<std::uint64_t, RawEmbeddingMatrix>> statics;
    statics.reserve(index.static_token_vectors.size());
    for (const auto& [token, vec] : index.static_token_vectors) {
        RawEmbeddingMatrix m;
        m.values = Matrix(1, vec.size());
        std::copy(vec.begin(), vec.end(), m.values.row(0));
        statics.emplace_back(token, std::move(m));
    }
    write_embedding_file(statics, dir + "/static.emb", index.dim_out);

    write_checkpoint(projection, dir + "/projection.crwt",
                     {"config_hash=" + cfg.config_hash(),
                      "projection_seed=" + std::to_string(cfg.projection_seed)});

    {
        std::ofstream os(dir + "/vocab.tsv", std::ios::trunc);
        if (!os) throw ValidationError("cannot write " + dir + "/vocab.tsv");
        std::vector<TokenId> ids;
        for (const auto& [token, df] : corpus.doc_freq) ids.push_back(token);
        std::sort(ids.begin(), ids.end());
        for (TokenId id : ids)
            os << id << '\t' << vocab.surface_of(id) << '\t' << corpus.doc_freq.at(id) << '\n';
    }
    {
        std::ofstream os(dir + "/meta.txt", std::ios::trunc);
        if (!os) throw ValidationError("cannot write " + dir + "/meta.txt");
        os << "config_hash=" << cfg.config_hash() << '\n'
           << "passage_count=" << corpus.passage_count() << '\n'
           << "dim_out=" << index.dim_out << '\n'
           << "provider_seed=" << cfg.provider.seed << '\n'
           << "projection_seed=" << cfg.projection_seed << '\n'
           << "threads=" << cfg.threads << '\n';
    }
}

LoadedIndex load_index(const std::string& dir) {
    LoadedIndex loaded;

    std::ifstream meta(dir + "/meta.txt");
    if (!meta) throw ValidationError("not an index directory (no meta.txt): " + dir);
    std::string line;
    while (std::getline(meta, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        if (line.substr(0, eq) == "passage_count")
            loaded.passage_count = std::stoull(line.substr(eq + 1));
    }

    loaded.projection = read_checkpoint(dir + "/projection.crwt");

    for (auto& [pid, m] : read_embedding_file(dir + "/passages.emb")) {
        EncodedPassage ep;
        ep.passage_id = pid;
        ep.rows = std::move(m.values);
        loaded.index.entries.emplace(pid, std::move(ep));
        loaded.index.dim_out = loaded.projection.dim_out();
    }
    for (auto& [token, m] : read_embedding_file(dir + "/static.emb")) {
        const double* r = m.values.row(0);
        loaded.index.static_token_vectors.emplace(
            static_cast<TokenId>(token), std::vector<double>(r, r + m.values.cols()));
    }

    std::ifstream vs(dir + "/vocab.tsv");
    if (!vs) throw ValidationError("missing vocab.tsv in " + dir);
    std::unordered_map<TokenId, std::uint32_t> doc_freq;
    std::vector<std::pair<TokenId, std::string>> surfaces;
    while (std::getline(vs, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        TokenId id;
        std::string surface;
        std::uint32_t df;
        if (!(ls >> id >> surface >> df))
            throw ValidationError("malformed vocab.tsv line in " + dir);
        doc_freq[id] = df;
        surfaces.emplace_back(id, surface);
    }
    std::sort(surfaces.begin(), surfaces.end());
    for (const auto& [id, surface] : surfaces) {
        TokenId assigned = loaded.vocab.intern(surface);
        if (assigned != id)
            throw ValidationError("vocab.tsv ids are not dense/ordered in " + dir);
    }

    const double n = static_cast<double>(loaded.passage_count);
    for (const auto& [token, df] : doc_freq)
        loaded.idf.values[token] = std::log((n + 1.0) / (static_cast<double>(df) + 1.0));
    return loaded;
}

std::vector<EncodedQuery> encode_queries(const QuerySet& queries, const EmbeddingProvider& provider,
                                         const Projection& projection, EncodingCounter& counter) {
    std::vector<EncodedQuery> out;
    out.reserve(queries.queries.size());
    for (const auto& [qid, tokens] : queries.queries) {
        RawEmbeddingMatrix raw = provider.encode(qid, tokens, counter, EncodeRole::query);
        EncodedQuery eq;
        eq.query_id = qid;
        eq.rows = project_and_normalize(projection, raw.values);
        out.push_back(std::move(eq));
    }
    return out;
}

IndexStats cmd_index(const PipelineConfig& cfg) {
    if (cfg.corpus_path.empty()) throw ValidationError("config is missing paths.corpus");
    if (!std::filesystem::exists(cfg.corpus_path))
        throw ValidationError("corpus path does not exist: " + cfg.corpus_path);
    cfg.apply_thread_setting();

    Vocabulary vocab;
    Corpus corpus = read_corpus_tsv(cfg.corpus_path, vocab);
    EmbeddingProvider provider(cfg.provider);
    Projection projection = Projection::random(cfg.dim_out, cfg.provider.dim_in,
                                               cfg.projection_seed);
    EncodingCounter counter;
    EncodedIndex index = build_index(corpus, vocab, provider, projection, counter);
    persist_index(cfg.index_dir, index, projection, vocab, corpus, cfg);

    IndexStats stats;
    stats.passage_count = corpus.passage_count();
    stats.vocab_size = corpus.doc_freq.size();
    stats.query_encodings = counter.query_encodings.load();
    stats.passage_encodings = counter.passage_encodings.load();
    return stats;
}

namespace {

struct RankContext {
    EncodedIndex index;
    Projection projection;
};

// Loads the persisted index, or rebuilds it in memory when ranking under a
// different (e.g. distilled) projection.
RankContext make_rank_context(const PipelineConfig& cfg,
                              const std::optional<std::string>& checkpoint) {
    RankContext ctx;
    if (!checkpoint) {
        LoadedIndex loaded = load_index(cfg.index_dir);
        ctx.index = std::move(loaded.index);
        ctx.projection = std::move(loaded.projection);
        return ctx;
    }
    ctx.projection = read_checkpoint(*checkpoint);
    Vocabulary vocab;
    Corpus corpus = read_corpus_tsv(cfg.corpus_path, vocab);
    EmbeddingProvider provider(cfg.provider);
    EncodingCounter counter;
    ctx.index = build_index(corpus, vocab, provider, ctx.projection, counter);
    return ctx;
}

}  // namespace

std::vector<Ranking> cmd_rank(const PipelineConfig& cfg, const std::optional<std::string>& checkpoint,
                              const std::vector<QueryId>& query_filter,
                              std::size_t mrt_repetitions) {
    if (cfg.queries_path.empty()) throw ValidationError("config is missing paths.queries");
    if (!std::filesystem::exists(cfg.queries_path))
        throw ValidationError("queries path does not exist: " + cfg.queries_path);
    cfg.apply_thread_setting();

    RankContext ctx = make_rank_context(cfg, checkpoint);

    Vocabulary vocab;
    QuerySet queries = read_queries_tsv(cfg.queries_path, vocab);
    if (!query_filter.empty()) {
        QuerySet filtered;
        for (QueryId qid : query_filter) {
            auto it = queries.queries.find(qid);
            if (it == queries.queries.end())
                throw ValidationError("unknown query id in filter: " + std::to_string(qid));
            filtered.queries.emplace(qid, it->second);
        }
        queries = std::move(filtered);
    }

    EmbeddingProvider provider(cfg.provider);
    EncodingCounter counter;
    std::vector<EncodedQuery> encoded = encode_queries(queries, provider, ctx.projection, counter);

    std::vector<Ranking> rankings(encoded.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(encoded.size()); ++i)
        rankings[i] = retrieve(encoded[i], ctx.index, cfg.depth);

    write_trec_run(rankings, cfg.run_path, cfg.tag);
    std::vector<std::string> extra;
    if (mrt_repetitions > 0) {
        double mrt = measure_mrt(encoded, ctx.index, cfg.depth, mrt_repetitions);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", mrt);
        extra.push_back(std::string("mrt_ms=") + buf);
        std::cout << "mrt_ms " << buf << "\n";
    }
    write_meta(cfg.run_path, cfg, extra);
    return rankings;
}

AnnotateStats cmd_annotate(const PipelineConfig& cfg) {
    if (cfg.qrels_path.empty()) throw ValidationError("config is missing paths.qrels");
    for (const std::string& p : {cfg.queries_path, cfg.qrels_path})
        if (!std::filesystem::exists(p))
            throw ValidationError("input path does not exist: " + p);
    cfg.apply_thread_setting();

    LoadedIndex loaded = load_index(cfg.index_dir);
    Qrels qrels = read_qrels(cfg.qrels_path);

    Vocabulary vocab;
    QuerySet queries = read_queries_tsv(cfg.queries_path, vocab);
    EmbeddingProvider provider(cfg.provider);
    EncodingCounter counter;
    std::vector<EncodedQuery> encoded =
        encode_queries(queries, provider, loaded.projection, counter);

    AnnotateParams params;
    params.prf = cfg.prf;
    params.negatives_per_query = cfg.negatives_per_query;
    params.seed = cfg.annotate_seed;
    // The hard pool is the top-100; the bm25-like stand-in samples uniformly
    // from the full depth-1000 ranking instead.
    params.negative_pool_depth =
        cfg.train.negatives_source == NegativesSource::top100_hard ? 100 : 1000;

    // Positive selection per query: highest grade at or above the cutoff,
    // ties to the smaller passage id.
    struct Job {
        const EncodedQuery* query = nullptr;
        PassageId positive = 0;
        std::set<PassageId> all_positives;
    };
    std::vector<Job> jobs;
    AnnotateStats stats;
    for (const auto& eq : encoded) {
        Job job;
        job.query = &eq;
        int best_grade = -1;
        auto it = qrels.judgments.lower_bound({eq.query_id, 0});
        for (; it != qrels.judgments.end() && it->first.first == eq.query_id; ++it) {
            if (it->second < cfg.binary_cutoff) continue;
            job.all_positives.insert(it->first.second);
            if (it->second > best_grade) {  // map order makes ties pick the smaller pid
                best_grade = it->second;
                job.positive = it->first.second;
            }
        }
        if (job.all_positives.empty()) {
            ++stats.skipped_without_positive;
            continue;
        }
        jobs.push_back(std::move(job));
    }

    std::vector<TeacherLabelSet> labels(jobs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(jobs.size()); ++i)
        labels[i] = annotate(*jobs[i].query, loaded.index, loaded.idf, jobs[i].positive,
                             jobs[i].all_positives, params);

    write_label_file(labels, cfg.labels_path);
    write_meta(cfg.labels_path, cfg);
    stats.annotated = labels.size();
    return stats;
}

TrainReport cmd_distill(const PipelineConfig& cfg) {
    for (const std::string& p : {cfg.corpus_path, cfg.queries_path, cfg.labels_path})
        if (!std::filesystem::exists(p))
            throw ValidationError("input path does not exist: " + p);
    cfg.apply_thread_setting();

    std::vector<TeacherLabelSet> labels = read_label_file(cfg.labels_path);
    Projection theta = read_checkpoint(cfg.index_dir + "/projection.crwt");
    if (theta.dim_in() != cfg.provider.dim_in)
        throw ValidationError("checkpoint dim_in " + std::to_string(theta.dim_in()) +
                              " does not match provider dim_in " +
                              std::to_string(cfg.provider.dim_in));

    Vocabulary vocab;
    Corpus corpus = read_corpus_tsv(cfg.corpus_path, vocab);
    QuerySet queries = read_queries_tsv(cfg.queries_path, vocab);
    EmbeddingProvider provider(cfg.provider);
    EncodingCounter counter;

    // Raw matrices cached per id: every sequence is encoded at most once.
    std::map<QueryId, RawEmbeddingMatrix> query_raws;
    std::map<PassageId, RawEmbeddingMatrix> passage_raws;
    for (const auto& label : labels) {
        auto qit = queries.queries.find(label.query_id);
        if (qit == queries.queries.end())
            throw ValidationError("label file references unknown query id " +
                                  std::to_string(label.query_id));
        if (!query_raws.count(label.query_id))
            query_raws.emplace(label.query_id, provider.encode(label.query_id, qit->second,
                                                               counter, EncodeRole::query));
        for (PassageId pid : label.candidates) {
            if (passage_raws.count(pid)) continue;
            auto pit = corpus.passages.find(pid);
            if (pit == corpus.passages.end())
                throw ValidationError("label file references unknown passage id " +
                                      std::to_string(pid));
            passage_raws.emplace(pid, provider.encode(pid, pit->second, counter,
                                                      EncodeRole::passage));
        }
    }

    RawAccess raw;
    raw.query = [&](QueryId qid) -> const RawEmbeddingMatrix& { return query_raws.at(qid); };
    raw.passage = [&](PassageId pid) -> const RawEmbeddingMatrix& { return passage_raws.at(pid); };

    ParameterSnapshot snapshot{theta, "pretrained-theta"};
    Projection student = init_student(snapshot);
    TrainReport report = train_student(labels, raw, student, cfg.train);
    write_checkpoint(report.final_projection, cfg.checkpoint_out,
                     {"config_hash=" + cfg.config_hash(),
                      "train_seed=" + std::to_string(cfg.train.seed),
                      "epochs=" + std::to_string(cfg.train.epochs)});

    if (!cfg.report_path.empty()) {
        std::ofstream os(cfg.report_path, std::ios::trunc);
        os << "epoch\tmean_loss\n";
        char buf[64];
        for (std::size_t e = 0; e < report.epoch_mean_loss.size(); ++e) {
            std::snprintf(buf, sizeof buf, "%zu\t%.9g", e + 1, report.epoch_mean_loss[e]);
            os << buf << '\n';
        }
        write_meta(cfg.report_path, cfg);
    }
    return report;
}

MetricsReport cmd_eval(const PipelineConfig& cfg, const std::string& run_path,
                       const std::string& qrels_path, const std::vector<int>& pr_cutoffs) {
    for (const std::string& p : {run_path, qrels_path})
        if (!std::filesystem::exists(p))
            throw ValidationError("input path does not exist: " + p);

    Qrels qrels = read_qrels(qrels_path);
    std::vector<TrecRunRow> rows = read_trec_run(run_path);

    std::map<QueryId, Ranking> by_query;
    for (const auto& row : rows) {
        Ranking& r = by_query[row.query_id];
        r.query_id = row.query_id;
        r.items.emplace_back(row.passage_id, row.score);
    }
    std::vector<Ranking> rankings;
    rankings.reserve(by_query.size());
    for (auto& [qid, r] : by_query) {
        std::stable_sort(r.items.begin(), r.items.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        r.depth = r.items.size();
        rankings.push_back(std::move(r));
    }

    MetricsReport report = evaluate_run(rankings, qrels, cfg.binary_cutoff);

    for (int cutoff : pr_cutoffs) {
        std::vector<std::pair<double, int>> scored;
        for (const auto& r : rankings)
            for (const auto& [pid, score] : r.items) {
                auto it = qrels.judgments.find({r.query_id, pid});
                if (it != qrels.judgments.end()) scored.emplace_back(score, it->second);
            }
        PrCurve curve = pr_curve(scored, cutoff);
        write_pr_curve(curve, run_path + ".pr" + std::to_string(cutoff) + ".tsv");
    }

    if (!cfg.report_path.empty()) {
        std::ofstream os(cfg.report_path, std::ios::trunc);
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "metric\tvalue\nmrr_at_10\t%.6f\nndcg_at_10\t%.6f\nrecall_at_1000\t%.6f\n"
                      "mrt_ms\t%.4f\nqueries\t%zu\n",
                      report.mrr_at_10, report.ndcg_at_10, report.recall_at_1000, report.mrt_ms,
                      report.evaluated_queries);
        os << buf;
        write_meta(cfg.report_path, cfg);
    }
    return report;
}

SweepResult cmd_sweep(const PipelineConfig& cfg) {
    for (const std::string& p : {cfg.queries_path, cfg.qrels_path})
        if (!std::filesystem::exists(p))
            throw ValidationError("input path does not exist: " + p);
    cfg.apply_thread_setting();

    LoadedIndex loaded = load_index(cfg.index_dir);
    Qrels qrels = read_qrels(cfg.qrels_path);
    Vocabulary vocab;
    QuerySet queries = read_queries_tsv(cfg.queries_path, vocab);
    EmbeddingProvider provider(cfg.provider);
    EncodingCounter counter;
    std::vector<EncodedQuery> encoded =
        encode_queries(queries, provider, loaded.projection, counter);

    SweepGrid grid;
    return sweep(cfg.prf, grid, encoded, loaded.index, loaded.idf, qrels, cfg.annotate_seed,
                 cfg.binary_cutoff);
}

SyntheticData cmd_gen_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
    SyntheticData data = generate_synthetic(spec);
    write_synthetic(data, out_dir);
    return data;
}

}  // namespace crank
