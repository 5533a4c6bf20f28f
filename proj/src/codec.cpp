#include "tabsynth/codec.hpp"

#include <algorithm>
#include <numeric>

#include "tabsynth/error.hpp"
#include "tabsynth/random.hpp"

namespace tabsynth {

Permutation::Permutation(std::vector<std::size_t> order, std::optional<std::uint64_t> seed)
    : order_(std::move(order)), seed_(seed) {
    std::vector<bool> seen(order_.size(), false);
    for (std::size_t v : order_) {
        if (v >= order_.size() || seen[v]) {
            throw Error(ErrorKind::data, "permutation is not a bijection");
        }
        seen[v] = true;
    }
}

Permutation Permutation::identity(std::size_t m) {
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    return Permutation(std::move(order));
}

Permutation Permutation::inverse() const {
    std::vector<std::size_t> inv(order_.size());
    for (std::size_t k = 0; k < order_.size(); ++k) {
        inv[order_[k]] = k;
    }
    return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& other) const {
    if (other.size() != size()) {
        throw Error(ErrorKind::data, "permutation size mismatch");
    }
    std::vector<std::size_t> out(order_.size());
    for (std::size_t k = 0; k < order_.size(); ++k) {
        out[k] = order_[other[k]];
    }
    return Permutation(std::move(out));
}

Permutation random_permutation(std::size_t m, std::uint64_t seed) {
    if (m == 0) {
        throw Error(ErrorKind::data, "permutation size must be positive");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    return Permutation(std::move(order), seed);
}

std::size_t slot_count(const Schema& schema, const CodecConfig& cfg) {
    return schema.columns.size() + ((cfg.includeLabel && schema.label) ? 1 : 0);
}

std::vector<std::string> rendered_names(const Schema& schema, const CodecConfig& cfg) {
    std::vector<std::string> names;
    const std::size_t slots = slot_count(schema, cfg);
    names.reserve(slots);
    for (std::size_t i = 0; i < slots; ++i) {
        if (!cfg.useRealFeatureNames) {
            names.push_back("V" + std::to_string(i + 1));
        } else if (i < schema.columns.size()) {
            names.push_back(schema.columns[i].name);
        } else {
            names.push_back(schema.label->name);
        }
    }
    return names;
}

void validate_codec(const Schema& schema, const CodecConfig& cfg) {
    if (cfg.clauseSeparator.empty()) {
        throw Error(ErrorKind::config, "clause separator must not be empty");
    }
    for (const auto& name : rendered_names(schema, cfg)) {
        if (name.find(cfg.clauseSeparator) != std::string::npos) {
            throw Error(ErrorKind::config, "feature name '" + name + "' contains the clause separator");
        }
    }
}

std::string spell_characters(std::string_view text) {
    std::string out;
    out.reserve(text.size() * 2);
    for (char c : text) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out.push_back(c);
    }
    return out;
}

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

std::string strip_spaces(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (!is_space(c)) {
            out.push_back(c);
        }
    }
    return out;
}

bool needs_quotes(std::string_view value, const CodecConfig& cfg) {
    if (value.empty()) {
        return true;
    }
    return value.find(cfg.clauseSeparator) != std::string_view::npos || value.front() == '"' ||
           is_space(value.front()) || is_space(value.back());
}

std::string quote(std::string_view value) {
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

std::string render_value(std::string_view text, ColumnKind kind, const CodecConfig& cfg) {
    if (kind == ColumnKind::numerical) {
        return cfg.useCharacterNumbers ? spell_characters(text) : std::string(text);
    }
    return needs_quotes(text, cfg) ? quote(text) : std::string(text);
}

EncodedSentence encode_clauses(const Row& row, const Schema& schema, const Permutation& perm,
                               const CodecConfig& cfg) {
    const std::size_t slots = slot_count(schema, cfg);
    if (perm.size() != slots) {
        throw Error(ErrorKind::data, "permutation covers " + std::to_string(perm.size()) + " slots, row has " +
                                         std::to_string(slots));
    }
    const auto names = rendered_names(schema, cfg);
    EncodedSentence sentence;
    sentence.order = perm;
    for (std::size_t k = 0; k < slots; ++k) {
        const std::size_t slot = perm[k];
        const Cell* cell = slot < schema.columns.size() ? &row.cells[slot] : (row.label ? &*row.label : nullptr);
        if (cell == nullptr || cell->is_missing()) {
            continue;
        }
        sentence.clauses.push_back({names[slot], cell->text()});
    }
    return sentence;
}

std::string encode_row(const Row& row, const Schema& schema, const Permutation& perm, const CodecConfig& cfg) {
    const std::size_t slots = slot_count(schema, cfg);
    if (perm.size() != slots) {
        throw Error(ErrorKind::data, "permutation covers " + std::to_string(perm.size()) + " slots, row has " +
                                         std::to_string(slots));
    }
    const auto names = rendered_names(schema, cfg);
    std::string out;
    bool first = true;
    for (std::size_t k = 0; k < slots; ++k) {
        const std::size_t slot = perm[k];
        const bool isLabel = slot >= schema.columns.size();
        const Cell* cell = isLabel ? (row.label ? &*row.label : nullptr) : &row.cells[slot];
        if (cell == nullptr || cell->is_missing()) {
            continue;
        }
        const ColumnKind kind = isLabel ? schema.label_kind() : schema.columns[slot].kind;
        if (!first) {
            out += cfg.clauseSeparator;
        }
        first = false;
        out += names[slot];
        out += kIsMarker;
        out += render_value(cell->text(), kind, cfg);
    }
    return out;
}

std::string_view to_string(DiagnosticKind kind) noexcept {
    switch (kind) {
        case DiagnosticKind::malformedClause: return "malformed-clause";
        case DiagnosticKind::unknownFeature: return "unknown-feature";
        case DiagnosticKind::duplicateFeature: return "duplicate-feature";
        case DiagnosticKind::typeMismatch: return "type-mismatch";
        case DiagnosticKind::emptyValue: return "empty-value";
    }
    return "unknown";
}

ParseResult parse_sentence(std::string_view text, const Schema& schema, const CodecConfig& cfg) {
    ParseResult result;
    const auto names = rendered_names(schema, cfg);
    const std::string& sep = cfg.clauseSeparator;
    std::vector<bool> seen(names.size(), false);

    // The "is" marker directly at the end of text, e.g. a truncated "Age is".
    const std::string_view isAtEnd = kIsMarker.substr(0, kIsMarker.size() - 1);

    std::size_t pos = 0;
    std::size_t clauseIndex = 0;
    while (pos < text.size()) {
        while (pos < text.size() && is_space(text[pos])) {
            ++pos;
        }
        if (pos >= text.size()) {
            break;
        }
        const std::size_t clauseStart = pos;
        auto add_diag = [&](DiagnosticKind kind, std::size_t end) {
            result.diagnostics.push_back(
                {kind, clauseIndex, std::string(text.substr(clauseStart, end - clauseStart))});
        };

        // Longest known name followed by the "is" marker.
        std::optional<std::size_t> slot;
        std::size_t valueStart = 0;
        std::size_t bestLen = 0;
        for (std::size_t s = 0; s < names.size(); ++s) {
            const auto& name = names[s];
            if (name.size() < bestLen || text.compare(pos, name.size(), name) != 0) {
                continue;
            }
            const std::size_t after = pos + name.size();
            if (text.compare(after, kIsMarker.size(), kIsMarker) == 0) {
                slot = s;
                bestLen = name.size();
                valueStart = after + kIsMarker.size();
            } else if (after + isAtEnd.size() == text.size() && text.compare(after, isAtEnd.size(), isAtEnd) == 0) {
                slot = s;
                bestLen = name.size();
                valueStart = text.size();
            }
        }

        std::string unknownName;
        if (!slot) {
            const std::size_t sepPos = text.find(sep, pos);
            const std::size_t isPos = text.find(kIsMarker, pos);
            if (isPos == std::string_view::npos || (sepPos != std::string_view::npos && sepPos < isPos)) {
                const std::size_t end = sepPos == std::string_view::npos ? text.size() : sepPos;
                add_diag(DiagnosticKind::malformedClause, end);
                pos = sepPos == std::string_view::npos ? text.size() : sepPos + sep.size();
                ++clauseIndex;
                continue;
            }
            unknownName = std::string(text.substr(pos, isPos - pos));
            valueStart = isPos + kIsMarker.size();
        }

        // Value: quoted or up to the next separator.
        std::size_t v = valueStart;
        while (v < text.size() && text[v] == ' ') {
            ++v;
        }
        std::string value;
        std::size_t clauseEnd;
        std::size_t next;
        bool malformed = false;
        bool quoted = false;
        if (v < text.size() && text[v] == '"') {
            quoted = true;
            std::size_t q = v + 1;
            bool closed = false;
            while (q < text.size()) {
                if (text[q] == '"') {
                    if (q + 1 < text.size() && text[q + 1] == '"') {
                        value.push_back('"');
                        q += 2;
                        continue;
                    }
                    closed = true;
                    ++q;
                    break;
                }
                value.push_back(text[q]);
                ++q;
            }
            if (!closed) {
                malformed = true;
                clauseEnd = text.size();
                next = text.size();
            } else {
                while (q < text.size() && text[q] == ' ' && text.compare(q, sep.size(), sep) != 0) {
                    ++q;
                }
                if (q >= text.size()) {
                    clauseEnd = next = text.size();
                } else if (text.compare(q, sep.size(), sep) == 0) {
                    clauseEnd = q;
                    next = q + sep.size();
                } else {
                    malformed = true;
                    const std::size_t sepPos = text.find(sep, q);
                    clauseEnd = sepPos == std::string_view::npos ? text.size() : sepPos;
                    next = sepPos == std::string_view::npos ? text.size() : sepPos + sep.size();
                }
            }
        } else {
            const std::size_t sepPos = text.find(sep, v);
            clauseEnd = sepPos == std::string_view::npos ? text.size() : sepPos;
            next = sepPos == std::string_view::npos ? text.size() : sepPos + sep.size();
            value = std::string(trim(text.substr(std::min(v, clauseEnd), clauseEnd - std::min(v, clauseEnd))));
        }
        pos = next;

        if (malformed) {
            add_diag(DiagnosticKind::malformedClause, clauseEnd);
        } else if (!slot) {
            add_diag(DiagnosticKind::unknownFeature, clauseEnd);
        } else if (!quoted && value.empty()) {
            add_diag(DiagnosticKind::emptyValue, clauseEnd);
        } else if (seen[*slot]) {
            add_diag(DiagnosticKind::duplicateFeature, clauseEnd);
        } else {
            const bool isLabel = *slot >= schema.columns.size();
            const ColumnKind kind = isLabel ? schema.label_kind() : schema.columns[*slot].kind;
            if (kind == ColumnKind::numerical) {
                double scratch = 0.0;
                std::string compact = strip_spaces(value);
                if (quoted || !parse_decimal(compact, scratch)) {
                    add_diag(DiagnosticKind::typeMismatch, clauseEnd);
                    ++clauseIndex;
                    continue;
                }
                value = std::move(compact);
            } else if (value.empty()) {
                add_diag(DiagnosticKind::emptyValue, clauseEnd);
                ++clauseIndex;
                continue;
            }
            seen[*slot] = true;
            result.clauses.push_back({*slot, names[*slot], std::move(value)});
        }
        ++clauseIndex;
    }
    return result;
}

DecodeResult decode_row(const ParseResult& parse, const Schema& schema, DecodePolicy policy, bool requireLabel) {
    DecodeResult result;
    if (parse.clauses.empty()) {
        result.rejection.reason = "no-clauses";
        result.rejection.diagnostics = parse.diagnostics;
        return result;
    }
    if (policy == DecodePolicy::strict && !parse.ok()) {
        result.rejection.reason = std::string(to_string(parse.first_error()->kind));
        result.rejection.diagnostics = parse.diagnostics;
        return result;
    }

    Row row;
    row.cells.assign(schema.columns.size(), Cell::missing());
    std::optional<Cell> label;
    for (const auto& clause : parse.clauses) {
        if (clause.slot < schema.columns.size()) {
            auto cell = Cell::from_text(clause.value, schema.columns[clause.slot].kind);
            row.cells[clause.slot] = std::move(*cell);
        } else if (schema.label) {
            label = Cell::from_text(clause.value, schema.label_kind());
        }
    }
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        if (row.cells[c].is_missing()) {
            result.rejection.missingFeatures.push_back(schema.columns[c].name);
        }
    }
    const bool labelMissing = schema.label && !label;
    if (policy == DecodePolicy::strict &&
        (!result.rejection.missingFeatures.empty() || (requireLabel && labelMissing))) {
        if (requireLabel && labelMissing) {
            result.rejection.missingFeatures.push_back(schema.label->name);
        }
        result.rejection.reason = "missing-feature";
        result.rejection.diagnostics = parse.diagnostics;
        return result;
    }
    if (schema.label && label) {
        row.label = std::move(label);
    }
    result.row = std::move(row);
    result.rejection.diagnostics = parse.diagnostics;
    return result;
}

}  // namespace tabsynth
