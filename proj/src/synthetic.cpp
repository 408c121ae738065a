#include "crank/synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace crank {

namespace {

void shuffle_tail(std::vector<std::string>& tokens, std::size_t fixed_prefix, SplitMix64& rng) {
    for (std::size_t i = tokens.size(); i > fixed_prefix + 1; --i)
        std::swap(tokens[i - 1], tokens[fixed_prefix + rng.next_below(i - fixed_prefix)]);
}

std::string join(const std::vector<std::string>& tokens) {
    std::ostringstream os;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) os << ' ';
        os << tokens[i];
    }
    return os.str();
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.topics == 0 || spec.queries_per_topic == 0 || spec.planted_per_topic == 0)
        throw ValidationError("synthetic spec requires topics, queries and planted positives");
    if (spec.total_passages < spec.structured_passages())
        throw ValidationError("total_passages " + std::to_string(spec.total_passages) +
                              " below the " + std::to_string(spec.structured_passages()) +
                              " structured passages");
    if (spec.content_terms_per_topic == 0 || spec.filler_vocab == 0 || spec.junk_vocab == 0 ||
        spec.noise_vocab == 0)
        throw ValidationError("synthetic vocab sizes must be positive");

    SyntheticData data;
    PassageId next_pid = 1;

    auto filler = [&](SplitMix64& rng) {
        return "f" + std::to_string(rng.next_below(spec.filler_vocab));
    };
    auto junk = [&](SplitMix64& rng) {
        return "j" + std::to_string(rng.next_below(spec.junk_vocab));
    };
    auto noise_term = [&](SplitMix64& rng) {
        return "n" + std::to_string(rng.next_below(spec.noise_vocab));
    };

    for (std::size_t t = 0; t < spec.topics; ++t) {
        std::string surface_a = "s" + std::to_string(t);
        std::string surface_b = "t" + std::to_string(t);
        std::vector<std::string> content;
        for (std::size_t k = 0; k < spec.content_terms_per_topic; ++k)
            content.push_back("c" + std::to_string(t) + "x" + std::to_string(k));

        // One query and its labeled positive per (topic, i). The query's
        // third term stays out of the corpus: it individualizes the query
        // without handing the teacher a give-away centroid. The labeled
        // passage opens with the topic surface phrase followed by the
        // topic's content terms, like a directly on-point answer would.
        for (std::size_t i = 0; i < spec.queries_per_topic; ++i) {
            QueryId qid = static_cast<QueryId>(t * spec.queries_per_topic + i + 1);
            data.queries[qid] = surface_a + " " + surface_b + " q" + std::to_string(qid);

            SplitMix64 rng(mix_seed(spec.seed, 0x1A00 + next_pid));
            std::vector<std::string> tokens{surface_a, surface_b};
            tokens.insert(tokens.end(), content.begin(), content.end());
            for (std::size_t f = 0; f < 5; ++f) tokens.push_back(filler(rng));
            shuffle_tail(tokens, 2 + content.size(), rng);
            data.corpus[next_pid] = join(tokens);
            data.labeled[qid] = next_pid;
            ++next_pid;
        }

        // Planted unlabeled positives: content-dense, one surface term, no
        // query-specific term. Relevant to every query of the topic.
        std::vector<PassageId> planted_ids;
        for (std::size_t p = 0; p < spec.planted_per_topic; ++p) {
            SplitMix64 rng(mix_seed(spec.seed, 0x2B00 + next_pid));
            std::vector<std::string> tokens{surface_a};
            for (std::size_t d = 0; d < 5; ++d)
                tokens.push_back(content[rng.next_below(content.size())]);
            tokens.push_back(filler(rng));
            tokens.push_back(filler(rng));
            shuffle_tail(tokens, 0, rng);
            data.corpus[next_pid] = join(tokens);
            planted_ids.push_back(next_pid);
            ++next_pid;
        }
        for (std::size_t i = 0; i < spec.queries_per_topic; ++i) {
            QueryId qid = static_cast<QueryId>(t * spec.queries_per_topic + i + 1);
            for (PassageId pid : planted_ids) data.planted[qid].insert(pid);
        }

        // Distractors: both surface terms buried in junk, never adjacent.
        for (std::size_t d = 0; d < spec.distractors_per_topic; ++d) {
            SplitMix64 rng(mix_seed(spec.seed, 0x3C00 + next_pid));
            std::vector<std::string> tokens{surface_a, junk(rng), surface_b,
                                            junk(rng), junk(rng)};
            for (std::size_t x = 0; x < 3; ++x)
                tokens.push_back(rng.next_double() < 0.5 ? junk(rng) : filler(rng));
            data.corpus[next_pid] = join(tokens);
            ++next_pid;
        }
    }

    while (next_pid <= spec.total_passages) {
        SplitMix64 rng(mix_seed(spec.seed, 0x4D00 + next_pid));
        std::vector<std::string> tokens;
        for (std::size_t d = 0; d < 6; ++d) tokens.push_back(noise_term(rng));
        tokens.push_back(filler(rng));
        tokens.push_back(filler(rng));
        shuffle_tail(tokens, 0, rng);
        data.corpus[next_pid] = join(tokens);
        ++next_pid;
    }
    return data;
}

void write_synthetic(const SyntheticData& data, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto open = [&](const std::string& name) {
        std::ofstream os(out_dir + "/" + name, std::ios::trunc);
        if (!os) throw ValidationError("cannot open " + out_dir + "/" + name + " for writing");
        return os;
    };

    {
        auto os = open("corpus.tsv");
        for (const auto& [pid, text] : data.corpus) os << pid << '\t' << text << '\n';
    }
    {
        auto os = open("queries.tsv");
        for (const auto& [qid, text] : data.queries) os << qid << '\t' << text << '\n';
    }
    {
        auto os = open("qrels_train.txt");
        for (const auto& [qid, pid] : data.labeled) os << qid << " 0 " << pid << " 2\n";
    }
    {
        auto os = open("qrels_planted.txt");
        for (const auto& [qid, pids] : data.planted)
            for (PassageId pid : pids) os << qid << " 0 " << pid << " 2\n";
    }
}

}  // namespace crank
