#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crank/common.hpp"
#include "crank/tokens.hpp"

namespace crank {

// Per-token embedding matrix straight out of the provider, before projection.
struct RawEmbeddingMatrix {
    Matrix values;  // token_count x dim_in

    std::size_t token_count() const { return values.rows(); }
    std::size_t dim_in() const { return values.cols(); }
};

enum class ProviderKind { hashed_deterministic, file_backed };

struct EmbeddingProviderConfig {
    ProviderKind kind = ProviderKind::hashed_deterministic;
    std::size_t dim_in = 32;
    std::uint64_t seed = 1;
    std::size_t context_window = 1;  // hashed provider only
    std::string path;                // file_backed only
};

// Distinguishes which side of the pipeline asked for an encoding; vocabulary
// lookups for the static token table are not billed to either.
enum class EncodeRole { query, passage };

struct EncodingCounter {
    std::atomic<std::uint64_t> query_encodings{0};
    std::atomic<std::uint64_t> passage_encodings{0};

    void bump(EncodeRole role) {
        if (role == EncodeRole::query)
            query_encodings.fetch_add(1, std::memory_order_relaxed);
        else
            passage_encodings.fetch_add(1, std::memory_order_relaxed);
    }
};

// Immutable after construction; encode() is safe to call concurrently.
//
// hashed_deterministic derives a unit base vector per token surface from the
// seed, then mixes in a symmetric context window (0.7 self / 0.3 neighbor
// mean) as a cheap stand-in for contextual encoding. file_backed serves
// pre-computed matrices keyed by entry id.
class EmbeddingProvider {
  public:
    explicit EmbeddingProvider(EmbeddingProviderConfig cfg);

    // entry_id identifies the sequence for file_backed lookup; the hashed
    // provider ignores it. Increments the counter by exactly 1.
    RawEmbeddingMatrix encode(std::uint64_t entry_id, std::span<const Token> tokens,
                              EncodingCounter& counter, EncodeRole role) const;

    // Context-free single-token encoding for the static vocabulary table.
    // Not counted: it is index-side bookkeeping, not a sequence encoding.
    std::vector<double> encode_token_isolated(const Token& token) const;

    std::size_t dim_in() const { return cfg_.dim_in; }
    const EmbeddingProviderConfig& config() const { return cfg_; }

  private:
    std::vector<double> base_vector(const Token& token) const;

    EmbeddingProviderConfig cfg_;
    std::unordered_map<std::uint64_t, RawEmbeddingMatrix> file_entries_;
};

// Binary embedding file, little-endian:
//   magic "CRNK" | version u32=1 | dim_in u32 | count u64
//   per entry: id u64 | token_count u32 | token_count*dim_in float32 row-major
void write_embedding_file(const std::vector<std::pair<std::uint64_t, RawEmbeddingMatrix>>& entries,
                          const std::string& path, std::size_t dim_in);

std::vector<std::pair<std::uint64_t, RawEmbeddingMatrix>> read_embedding_file(
    const std::string& path);

}  // namespace crank
