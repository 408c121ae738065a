#include "crank/tokens.hpp"

#include <cctype>

namespace crank {

std::vector<std::string> split_lowercase(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!current.empty()) {
                out.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::vector<Token> tokenize(const std::string& text, Vocabulary& vocab) {
    std::vector<Token> tokens;
    for (auto& surface : split_lowercase(text)) {
        Token t;
        t.id = vocab.intern(surface);
        t.surface = std::move(surface);
        tokens.push_back(std::move(t));
    }
    return tokens;
}

}  // namespace crank
