#include "crank/distill.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace crank {

Projection init_student(const ParameterSnapshot& snapshot) {
    if (snapshot.projection.weights.empty()) throw ValidationError("empty parameter snapshot");
    return snapshot.projection;  // value copy; the snapshot stays untouched
}

double residual_gap(const RelevanceDistribution& teacher_target,
                    const RelevanceDistribution& student_dist) {
    return kl_divergence(teacher_target, student_dist);
}

TrainReport train_student(const std::vector<TeacherLabelSet>& labels, const RawAccess& raw,
                          const Projection& init, const TrainConfig& cfg) {
    cfg.validate();
    if (labels.empty()) throw ValidationError("no teacher labels to train on");

    Projection student = init;
    TrainReport report;
    report.epoch_mean_loss.reserve(cfg.epochs);

    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        SplitMix64 shuffler(mix_seed(cfg.seed, epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffler.next_below(i)]);

        double loss_sum = 0.0;
        for (std::size_t idx : order) {
            const TeacherLabelSet& label = labels[idx];

            std::vector<RawEmbeddingMatrix> candidates;
            candidates.reserve(label.candidates.size());
            for (PassageId pid : label.candidates) candidates.push_back(raw.passage(pid));

            std::vector<double> target;
            if (cfg.objective == TrainObjective::kd_kl) {
                target = label.target.probabilities;
            } else {
                target.assign(label.candidates.size(), 0.0);
                auto it = std::find(label.candidates.begin(), label.candidates.end(),
                                    label.observed_positive);
                if (it == label.candidates.end())
                    throw ValidationError("observed positive missing from candidates of query " +
                                          std::to_string(label.query_id));
                target[static_cast<std::size_t>(it - label.candidates.begin())] = 1.0;
            }

            ListwiseGrad g = grad_kd_loss(student, raw.query(label.query_id), candidates, target);
            loss_sum += g.loss;

            double scale = cfg.learning_rate;
            if (cfg.gradient_clip) {
                double norm = l2_norm(g.grad.data().data(), g.grad.data().size());
                if (norm > *cfg.gradient_clip) scale *= *cfg.gradient_clip / norm;
            }
            if (scale != 0.0) {
                auto& w = student.weights.data();
                const auto& gd = g.grad.data();
                for (std::size_t k = 0; k < w.size(); ++k) w[k] -= scale * gd[k];
            }
            ++report.steps;
        }
        report.epoch_mean_loss.push_back(loss_sum / static_cast<double>(labels.size()));
    }

    report.final_projection = std::move(student);
    return report;
}

namespace {

constexpr char kMagic[4] = {'C', 'R', 'W', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const char* what) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (is.gcount() != 4)
        throw ValidationError(std::string("truncated checkpoint reading ") + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_checkpoint(const Projection& projection, const std::string& path,
                      const std::vector<std::string>& sidecar_lines) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ValidationError("cannot open " + path + " for writing");
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(projection.dim_out()));
    put_u32(os, static_cast<std::uint32_t>(projection.dim_in()));
    for (double v : projection.weights.data()) {
        float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(os, bits);
    }
    if (!os) throw std::runtime_error("I/O failure writing " + path);

    if (!sidecar_lines.empty()) {
        std::ofstream meta(path + ".meta", std::ios::trunc);
        for (const auto& line : sidecar_lines) meta << line << '\n';
    }
}

Projection read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open checkpoint " + path);
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw ValidationError("bad magic in " + path + ": not a checkpoint file");
    std::uint32_t version = get_u32(is, "version");
    if (version != kVersion)
        throw ValidationError("unsupported checkpoint version " + std::to_string(version));
    std::uint32_t dim_out = get_u32(is, "dim_out");
    std::uint32_t dim_in = get_u32(is, "dim_in");
    if (dim_out == 0 || dim_in == 0) throw ValidationError("checkpoint declares zero dims");

    Projection p;
    p.weights = Matrix(dim_out, dim_in);
    for (auto& v : p.weights.data()) {
        std::uint32_t bits = get_u32(is, "weights");
        float f;
        std::memcpy(&f, &bits, 4);
        v = static_cast<double>(f);
    }
    return p;
}

}  // namespace crank
