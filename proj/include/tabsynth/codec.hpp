#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabsynth/table.hpp"

namespace tabsynth {

/// Order in which clauses are emitted: position k holds the slot index
/// (feature column, or the label slot == schema.size()).
class Permutation {
public:
    Permutation() = default;
    explicit Permutation(std::vector<std::size_t> order, std::optional<std::uint64_t> seed = std::nullopt);

    static Permutation identity(std::size_t m);

    std::size_t size() const noexcept { return order_.size(); }
    std::size_t operator[](std::size_t position) const { return order_[position]; }
    const std::vector<std::size_t>& order() const noexcept { return order_; }
    const std::optional<std::uint64_t>& seed() const noexcept { return seed_; }

    Permutation inverse() const;
    /// (this ∘ other)[k] = this[other[k]]
    Permutation compose(const Permutation& other) const;

    bool operator==(const Permutation& other) const noexcept { return order_ == other.order_; }

private:
    std::vector<std::size_t> order_;
    std::optional<std::uint64_t> seed_;
};

/// Uniform over the m! orderings (Fisher-Yates on the seeded generator).
Permutation random_permutation(std::size_t m, std::uint64_t seed);

struct CodecConfig {
    bool useCharacterNumbers = true;
    bool useRealFeatureNames = true;  // false renames columns to V1..Vm (label becomes V{m+1})
    bool includeLabel = true;         // serialize the label as an ordinary clause
    std::string clauseSeparator = ", ";

    bool operator==(const CodecConfig&) const = default;
};

inline constexpr std::string_view kIsMarker = " is ";

/// Number of clause slots a row serializes to.
std::size_t slot_count(const Schema& schema, const CodecConfig& cfg);

/// Names as they appear in text, indexed by slot.
std::vector<std::string> rendered_names(const Schema& schema, const CodecConfig& cfg);

/// Throws config error if the separator is empty or occurs inside a rendered name.
void validate_codec(const Schema& schema, const CodecConfig& cfg);

/// "-12.5" -> "- 1 2 . 5"
std::string spell_characters(std::string_view text);

/// Text of a value as it appears after "is": spelled numbers when character
/// encoding is on, categorical values verbatim unless they would not survive
/// parsing (separator inside, leading quote, surrounding whitespace), in
/// which case they are double-quoted with "" escapes.
std::string render_value(std::string_view text, ColumnKind kind, const CodecConfig& cfg);

struct Clause {
    std::string feature;  // rendered name
    std::string value;    // original cell text
    bool operator==(const Clause&) const = default;
};

struct EncodedSentence {
    std::vector<Clause> clauses;
    Permutation order;
};

EncodedSentence encode_clauses(const Row& row, const Schema& schema, const Permutation& perm,
                               const CodecConfig& cfg);

/// "[Feature] is [Value]" clauses joined by the separator, in permuted
/// order. Missing cells are omitted.
std::string encode_row(const Row& row, const Schema& schema, const Permutation& perm, const CodecConfig& cfg);

enum class DiagnosticKind {
    malformedClause,
    unknownFeature,
    duplicateFeature,
    typeMismatch,
    emptyValue,
};

std::string_view to_string(DiagnosticKind kind) noexcept;

struct Diagnostic {
    DiagnosticKind kind;
    std::size_t clauseIndex = 0;
    std::string clause;
};

struct ParsedClause {
    std::size_t slot = 0;
    std::string feature;  // rendered name
    std::string value;    // decoded value text (spaces removed from numbers)
};

struct ParseResult {
    std::vector<ParsedClause> clauses;
    std::vector<Diagnostic> diagnostics;

    bool ok() const noexcept { return diagnostics.empty(); }
    const Diagnostic* first_error() const noexcept { return diagnostics.empty() ? nullptr : &diagnostics.front(); }
};

/// Tolerant parser for model text. Never throws on content; every problem is
/// reported as a diagnostic and the offending clause is skipped. Duplicate
/// clauses keep the first occurrence.
ParseResult parse_sentence(std::string_view text, const Schema& schema, const CodecConfig& cfg);

enum class DecodePolicy { strict, partial };

struct Rejection {
    std::string reason;  // histogram key
    std::vector<Diagnostic> diagnostics;
    std::vector<std::string> missingFeatures;
};

struct DecodeResult {
    std::optional<Row> row;
    Rejection rejection;

    explicit operator bool() const noexcept { return row.has_value(); }
};

/// Strict: every feature exactly once, type-valid, no diagnostics (and the
/// label too when requireLabel). Partial: absent or invalid features become
/// Missing. The label is attached whenever the text carries a valid one.
DecodeResult decode_row(const ParseResult& parse, const Schema& schema, DecodePolicy policy,
                        bool requireLabel = false);

}  // namespace tabsynth
