#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crank/collective.hpp"
#include "crank/relevance.hpp"

namespace crank {

enum class TrainObjective { kd_kl, hard_ce };
enum class NegativesSource { bm25_like_random, top100_hard };

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 10;
    std::uint64_t seed = 1;
    TrainObjective objective = TrainObjective::kd_kl;
    NegativesSource negatives_source = NegativesSource::top100_hard;
    std::optional<double> gradient_clip;  // global Frobenius-norm clip

    void validate() const {
        if (learning_rate < 0.0) throw ValidationError("learning_rate must be >= 0");
        if (epochs == 0) throw ValidationError("epochs must be positive");
        if (gradient_clip && *gradient_clip <= 0.0)
            throw ValidationError("gradient_clip must be positive");
    }
};

struct TrainReport {
    std::vector<double> epoch_mean_loss;  // length = epochs
    Projection final_projection;
    std::size_t steps = 0;
};

// Deep copy of the snapshot's projection; training the returned student
// never touches the snapshot.
Projection init_student(const ParameterSnapshot& snapshot);

// Resolves raw per-token matrices for queries and passages during training.
struct RawAccess {
    std::function<const RawEmbeddingMatrix&(QueryId)> query;
    std::function<const RawEmbeddingMatrix&(PassageId)> passage;
};

// Plain gradient descent, one query per step, seeded shuffled order per
// epoch. kd_kl trains against the stored teacher target; hard_ce against a
// one-hot target at the observed positive. Deterministic given (labels,
// init, cfg).
TrainReport train_student(const std::vector<TeacherLabelSet>& labels, const RawAccess& raw,
                          const Projection& init, const TrainConfig& cfg);

// KL(teacher target || student distribution): the quantity training drives
// toward zero.
double residual_gap(const RelevanceDistribution& teacher_target,
                    const RelevanceDistribution& student_dist);

// Checkpoint: magic "CRWT" | version u32=1 | dim_out u32 | dim_in u32 |
// dim_out*dim_in float32 row-major. A sidecar text file at path + ".meta"
// records provenance lines supplied by the caller.
void write_checkpoint(const Projection& projection, const std::string& path,
                      const std::vector<std::string>& sidecar_lines = {});
Projection read_checkpoint(const std::string& path);

}  // namespace crank
