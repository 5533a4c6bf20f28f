#include "tabsynth/vocabulary.hpp"

#include <set>

#include "tabsynth/error.hpp"

namespace tabsynth {

namespace {

const std::vector<std::string>& special_tokens() {
    static const std::vector<std::string> specials = {
        std::string(special::bos), std::string(special::eos), std::string(special::sep),
        std::string(special::is), std::string(special::unk)};
    return specials;
}

void split_whitespace(std::string_view text, std::vector<std::string>& out) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) {
            ++i;
        }
        std::size_t j = i;
        while (j < text.size() && !(text[j] == ' ' || text[j] == '\t' || text[j] == '\n' || text[j] == '\r')) {
            ++j;
        }
        if (j > i) {
            out.emplace_back(text.substr(i, j - i));
        }
        i = j;
    }
}

}  // namespace

Vocabulary::Vocabulary() {
    for (const auto& s : special_tokens()) {
        add(s);
    }
}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
    for (const auto& t : tokens) {
        add(t);
    }
}

bool Vocabulary::contains(std::string_view token) const {
    return index_.find(std::string(token)) != index_.end();
}

TokenId Vocabulary::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? special::unkId : it->second;
}

TokenId Vocabulary::add(std::string_view token) {
    auto [it, inserted] = index_.emplace(std::string(token), static_cast<TokenId>(tokens_.size()));
    if (inserted) {
        tokens_.emplace_back(token);
    }
    return it->second;
}

std::vector<std::string> tokenize(std::string_view text, std::string_view separator) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = separator.empty() ? std::string_view::npos : text.find(separator, pos);
        split_whitespace(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos), out);
        if (next == std::string_view::npos) {
            break;
        }
        out.emplace_back(special::sep);
        pos = next + separator.size();
    }
    return out;
}

std::string detokenize(const std::vector<std::string>& tokens, std::string_view separator) {
    std::string out;
    bool needSpace = false;
    for (const auto& t : tokens) {
        if (t == special::bos || t == special::eos) {
            continue;
        }
        if (t == special::sep) {
            out += separator;
            needSpace = false;
            continue;
        }
        if (needSpace) {
            out.push_back(' ');
        }
        out += t;
        needSpace = true;
    }
    return out;
}

Vocabulary build_vocabulary(const std::vector<std::string>& sentences, std::string_view separator) {
    if (sentences.empty()) {
        throw Error(ErrorKind::data, "cannot build a vocabulary from zero sentences");
    }
    std::set<std::string> words;
    for (const auto& s : sentences) {
        for (auto& t : tokenize(s, separator)) {
            words.insert(std::move(t));
        }
    }
    std::vector<std::string> ordered;
    for (const auto& w : words) {
        ordered.push_back(w);
    }
    return Vocabulary(ordered);
}

}  // namespace tabsynth
