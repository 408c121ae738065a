#include "crank/embeddings.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>

namespace crank {

namespace {

constexpr char kMagic[4] = {'C', 'R', 'N', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

std::uint32_t get_u32(std::istream& is, const char* what, std::uint64_t& offset) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (is.gcount() != 4)
        throw ValidationError(std::string("truncated embedding file reading ") + what +
                              " at byte offset " + std::to_string(offset));
    offset += 4;
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& is, const char* what, std::uint64_t& offset) {
    std::uint64_t lo = get_u32(is, what, offset);
    std::uint64_t hi = get_u32(is, what, offset);
    return lo | (hi << 32);
}

float get_f32(std::istream& is, const char* what, std::uint64_t& offset) {
    std::uint32_t bits = get_u32(is, what, offset);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

EmbeddingProvider::EmbeddingProvider(EmbeddingProviderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.dim_in == 0) throw ValidationError("provider dim_in must be positive");
    if (cfg_.kind == ProviderKind::file_backed) {
        for (auto& [id, matrix] : read_embedding_file(cfg_.path)) {
            if (matrix.dim_in() != cfg_.dim_in)
                throw ValidationError("embedding file dim " + std::to_string(matrix.dim_in()) +
                                      " does not match configured dim_in " +
                                      std::to_string(cfg_.dim_in));
            file_entries_.emplace(id, std::move(matrix));
        }
    }
}

std::vector<double> EmbeddingProvider::base_vector(const Token& token) const {
    // Keyed by surface, not interned id, so the same text embeds identically
    // regardless of vocabulary construction order.
    SplitMix64 rng(fnv1a64(token.surface) ^ (cfg_.seed * 0x9E3779B97F4A7C15ULL));
    std::vector<double> v(cfg_.dim_in);
    for (auto& x : v) x = rng.next_gaussian();
    double norm = l2_norm(v.data(), v.size());
    if (norm == 0.0) {
        v[0] = 1.0;  // unreachable in practice
        return v;
    }
    for (auto& x : v) x /= norm;
    return v;
}

RawEmbeddingMatrix EmbeddingProvider::encode(std::uint64_t entry_id, std::span<const Token> tokens,
                                             EncodingCounter& counter, EncodeRole role) const {
    if (tokens.empty()) throw ValidationError("empty input: cannot encode zero tokens");

    if (cfg_.kind == ProviderKind::file_backed) {
        auto it = file_entries_.find(entry_id);
        if (it == file_entries_.end())
            throw ValidationError("embedding file has no entry for id " + std::to_string(entry_id));
        if (it->second.token_count() != tokens.size())
            throw ValidationError("entry " + std::to_string(entry_id) + " has " +
                                  std::to_string(it->second.token_count()) +
                                  " rows but the token sequence has " +
                                  std::to_string(tokens.size()));
        counter.bump(role);
        return it->second;
    }

    const std::size_t n = tokens.size();
    std::vector<std::vector<double>> bases(n);
    for (std::size_t i = 0; i < n; ++i) bases[i] = base_vector(tokens[i]);

    RawEmbeddingMatrix out;
    out.values = Matrix(n, cfg_.dim_in);
    const std::size_t w = cfg_.context_window;
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.values.row(i);
        std::size_t lo = i >= w ? i - w : 0;
        std::size_t hi = std::min(n - 1, i + w);
        std::size_t neighbors = (hi - lo + 1) - 1;  // window minus self
        if (w == 0 || neighbors == 0) {
            std::memcpy(row, bases[i].data(), cfg_.dim_in * sizeof(double));
            continue;
        }
        std::vector<double> ctx(cfg_.dim_in, 0.0);
        for (std::size_t k = lo; k <= hi; ++k) {
            if (k == i) continue;
            for (std::size_t d = 0; d < cfg_.dim_in; ++d) ctx[d] += bases[k][d];
        }
        for (std::size_t d = 0; d < cfg_.dim_in; ++d)
            row[d] = 0.7 * bases[i][d] + 0.3 * (ctx[d] / static_cast<double>(neighbors));
    }
    counter.bump(role);
    return out;
}

std::vector<double> EmbeddingProvider::encode_token_isolated(const Token& token) const {
    if (cfg_.kind == ProviderKind::file_backed)
        throw ValidationError("file-backed provider has no per-token vectors");
    return base_vector(token);
}

void write_embedding_file(const std::vector<std::pair<std::uint64_t, RawEmbeddingMatrix>>& entries,
                          const std::string& path, std::size_t dim_in) {
    {
        std::set<std::uint64_t> seen;
        for (const auto& [id, m] : entries) {
            if (!seen.insert(id).second)
                throw ValidationError("duplicate embedding entry id " + std::to_string(id));
            if (m.dim_in() != dim_in)
                throw ValidationError("entry " + std::to_string(id) + " dim " +
                                      std::to_string(m.dim_in()) + " != file dim " +
                                      std::to_string(dim_in));
        }
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ValidationError("cannot open " + path + " for writing");
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(dim_in));
    put_u64(os, entries.size());
    for (const auto& [id, m] : entries) {
        put_u64(os, id);
        put_u32(os, static_cast<std::uint32_t>(m.token_count()));
        for (std::size_t r = 0; r < m.token_count(); ++r)
            for (std::size_t c = 0; c < m.dim_in(); ++c)
                put_f32(os, static_cast<float>(m.values(r, c)));
    }
    if (!os) throw std::runtime_error("I/O failure writing " + path);
}

std::vector<std::pair<std::uint64_t, RawEmbeddingMatrix>> read_embedding_file(
    const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open embedding file " + path);
    std::uint64_t offset = 0;

    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw ValidationError("bad magic in " + path + ": not an embedding file");
    offset += 4;

    std::uint32_t version = get_u32(is, "version", offset);
    if (version != kVersion)
        throw ValidationError("unsupported embedding file version " + std::to_string(version));
    std::uint32_t dim_in = get_u32(is, "dim_in", offset);
    if (dim_in == 0) throw ValidationError("embedding file declares dim_in 0");
    std::uint64_t count = get_u64(is, "entry count", offset);

    std::vector<std::pair<std::uint64_t, RawEmbeddingMatrix>> entries;
    entries.reserve(count);
    for (std::uint64_t e = 0; e < count; ++e) {
        std::uint64_t id = get_u64(is, "entry id", offset);
        std::uint32_t rows = get_u32(is, "token count", offset);
        RawEmbeddingMatrix m;
        m.values = Matrix(rows, dim_in);
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < dim_in; ++c)
                m.values(r, c) = get_f32(is, "matrix payload", offset);
        entries.emplace_back(id, std::move(m));
    }
    return entries;
}

}  // namespace crank
