#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tabsynth {

using TokenId = std::uint32_t;

namespace special {
inline constexpr std::string_view bos = "<bos>";
inline constexpr std::string_view eos = "<eos>";
inline constexpr std::string_view sep = ",";
inline constexpr std::string_view is = "is";
inline constexpr std::string_view unk = "<unk>";

inline constexpr TokenId bosId = 0;
inline constexpr TokenId eosId = 1;
inline constexpr TokenId sepId = 2;
inline constexpr TokenId isId = 3;
inline constexpr TokenId unkId = 4;
}  // namespace special

/// Dense token <-> id map. Specials occupy ids 0..4; the rest follow in the
/// order they were added (lexicographic when built from sentences).
class Vocabulary {
public:
    Vocabulary();
    explicit Vocabulary(const std::vector<std::string>& tokens);  // specials prepended if absent

    std::size_t size() const noexcept { return tokens_.size(); }
    const std::string& token(TokenId id) const { return tokens_.at(id); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    bool contains(std::string_view token) const;
    /// Id of token, or UNK.
    TokenId id(std::string_view token) const;
    /// Id of token, appending it if absent.
    TokenId add(std::string_view token);

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

/// Splits a rendered sentence into tokens: the clause separator becomes the
/// "," token, everything else is split on whitespace.
std::vector<std::string> tokenize(std::string_view text, std::string_view separator);

/// Inverse of tokenize up to whitespace normalization. Specials BOS/EOS are
/// dropped.
std::string detokenize(const std::vector<std::string>& tokens, std::string_view separator);

/// Lexicographically ordered vocabulary over all sentences. Throws data error
/// on empty input.
Vocabulary build_vocabulary(const std::vector<std::string>& sentences, std::string_view separator);

}  // namespace tabsynth
