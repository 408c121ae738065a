// Benchmark: serial vs OpenMP brute-force MaxSim scoring over synthetic
// corpora of increasing size.

#include <chrono>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "crank/index.hpp"
#include "crank/pipeline.hpp"
#include "crank/synthetic.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double g_sink = 0.0;  // defeats dead-code elimination of the scored passes

double time_passes(const std::vector<crank::EncodedQuery>& queries,
                   const crank::EncodedIndex& index, bool parallel, std::size_t passes) {
    // Warm-up
    for (const auto& q : queries) {
        auto s = parallel ? crank::score_all(q, index) : crank::score_all_serial(q, index);
        g_sink += s[0];
    }
    auto start = Clock::now();
    for (std::size_t p = 0; p < passes; ++p)
        for (const auto& q : queries) {
            auto s = parallel ? crank::score_all(q, index) : crank::score_all_serial(q, index);
            g_sink += s[0];
        }
    auto end = Clock::now();
    return std::chrono::duration<double, std::milli>(end - start).count() /
           static_cast<double>(passes * queries.size());
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t passes = 3;
    std::vector<std::size_t> sizes{1000, 4000};
    if (argc > 1) passes = static_cast<std::size_t>(std::stoul(argv[1]));

#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: not enabled in this build\n");
#endif
    std::printf("%8s %10s %12s %12s %8s\n", "|P|", "queries", "serial ms/q", "openmp ms/q",
                "speedup");

    for (std::size_t size : sizes) {
        crank::SyntheticSpec spec;
        spec.total_passages = size;
        spec.seed = 99;
        crank::SyntheticData data = crank::generate_synthetic(spec);

        crank::Vocabulary vocab;
        crank::Corpus corpus;
        for (const auto& [pid, text] : data.corpus) {
            auto tokens = crank::tokenize(text, vocab);
            std::set<crank::TokenId> distinct;
            for (const auto& t : tokens) distinct.insert(t.id);
            for (crank::TokenId t : distinct) corpus.doc_freq[t] += 1;
            corpus.passages.emplace(pid, std::move(tokens));
        }

        crank::EmbeddingProviderConfig pcfg;
        pcfg.dim_in = 32;
        pcfg.seed = 7;
        crank::EmbeddingProvider provider(pcfg);
        crank::Projection projection = crank::Projection::random(16, 32, 11);
        crank::EncodingCounter counter;
        crank::EncodedIndex index =
            crank::build_index(corpus, vocab, provider, projection, counter);

        crank::QuerySet qs;
        std::size_t taken = 0;
        for (const auto& [qid, text] : data.queries) {
            if (taken++ == 20) break;
            qs.queries.emplace(qid, crank::tokenize(text, vocab));
        }
        auto queries = crank::encode_queries(qs, provider, projection, counter);

        double serial_ms = time_passes(queries, index, false, passes);
        double parallel_ms = time_passes(queries, index, true, passes);
        std::printf("%8zu %10zu %12.3f %12.3f %8.2fx\n", size, queries.size(), serial_ms,
                    parallel_ms, serial_ms / parallel_ms);
    }
    return g_sink == 0.12345 ? 1 : 0;
}
