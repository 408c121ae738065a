#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "crank/common.hpp"

namespace crank {

struct Token {
    TokenId id = 0;
    std::string surface;
};

// Interns lowercased surfaces; equal surfaces always map to equal ids within
// one vocabulary instance.
class Vocabulary {
  public:
    TokenId intern(const std::string& surface) {
        auto it = ids_.find(surface);
        if (it != ids_.end()) return it->second;
        TokenId id = static_cast<TokenId>(surfaces_.size());
        surfaces_.push_back(surface);
        ids_.emplace(surface, id);
        return id;
    }

    bool contains(const std::string& surface) const { return ids_.count(surface) != 0; }

    TokenId id_of(const std::string& surface) const {
        auto it = ids_.find(surface);
        if (it == ids_.end()) throw ValidationError("unknown token surface: " + surface);
        return it->second;
    }

    const std::string& surface_of(TokenId id) const {
        if (id >= surfaces_.size()) throw ValidationError("unknown token id");
        return surfaces_[id];
    }

    std::size_t size() const { return surfaces_.size(); }

  private:
    std::unordered_map<std::string, TokenId> ids_;
    std::vector<std::string> surfaces_;
};

// Whitespace split + ASCII lowercasing. No subword segmentation.
std::vector<std::string> split_lowercase(const std::string& text);

std::vector<Token> tokenize(const std::string& text, Vocabulary& vocab);

}  // namespace crank
