#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "crank/common.hpp"

namespace crank {

// Topic-structured corpus generator. Each topic contributes, per query, one
// labeled positive that states both topic surface terms plus the topic's
// content terms; a pool of unlabeled "planted" positives that share the
// content terms but only one surface term; and distractors that state both
// surface terms padded with junk. Noise passages fill the corpus to
// total_passages. Only the labeled positives appear in the training qrels;
// the planted truth goes to a separate qrels file for evaluation.
struct SyntheticSpec {
    std::size_t topics = 10;
    std::size_t queries_per_topic = 5;
    std::size_t planted_per_topic = 4;
    std::size_t distractors_per_topic = 8;
    std::size_t total_passages = 500;
    std::size_t content_terms_per_topic = 3;
    std::size_t filler_vocab = 5;
    std::size_t junk_vocab = 15;
    std::size_t noise_vocab = 50;
    std::uint64_t seed = 1;

    std::size_t query_count() const { return topics * queries_per_topic; }
    std::size_t structured_passages() const {
        return topics * (queries_per_topic + planted_per_topic + distractors_per_topic);
    }
};

struct SyntheticData {
    std::map<PassageId, std::string> corpus;   // pid -> text
    std::map<QueryId, std::string> queries;    // qid -> text
    std::map<QueryId, PassageId> labeled;      // training truth (one per query)
    std::map<QueryId, std::set<PassageId>> planted;  // evaluation truth
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Writes corpus.tsv, queries.tsv, qrels_train.txt, qrels_planted.txt under
// out_dir (created if missing). Grades are 2 in both qrels files.
void write_synthetic(const SyntheticData& data, const std::string& out_dir);

}  // namespace crank
