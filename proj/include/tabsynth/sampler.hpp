#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabsynth/backend.hpp"
#include "tabsynth/codec.hpp"
#include "tabsynth/error.hpp"
#include "tabsynth/table.hpp"

namespace tabsynth {

enum class Strategy { featureName, onePair, multiPair };

Strategy parse_strategy(std::string_view text);
std::string_view to_string(Strategy strategy) noexcept;

struct PromptPair {
    std::string feature;  // schema name (the label name is allowed)
    std::string value;    // original cell text

    bool operator==(const PromptPair&) const = default;
};

struct Prompt {
    Strategy strategy = Strategy::featureName;
    std::vector<PromptPair> pairs;
    std::optional<std::string> startFeature;

    /// Throws usage error if a pair names an unknown feature, names one twice,
    /// or the pair count does not fit the strategy.
    void validate(const Schema& schema) const;
};

struct SamplingConfig {
    double temperature = 1.0;
    int maxTokens = 256;
    int maxAttemptsPerRow = 20;
    std::uint64_t seed = 0;
    bool categoricalClamp = false;
    // Backend generators mask tokens that would break the clause structure.
    bool constrained = true;

    void validate() const;
};

/// Clause structure a backend generator can enforce token by token: each
/// rendered name at most once, "is" after a name, a non-empty value, and no
/// end of row before every required name has appeared.
struct ClauseGrammar {
    std::vector<std::vector<std::string>> names;  // tokenized rendered names, by slot
    std::vector<bool> required;

    /// Feature slots are required; the label slot (when serialized) is
    /// required only if requireLabel.
    static ClauseGrammar for_schema(const Schema& schema, const CodecConfig& codec, bool requireLabel = false);
};

/// Value sets per slot (features, then label) seen in the fine-tuning table.
struct ClampSets {
    std::vector<std::set<std::string>> values;  // empty set for numerical slots

    static ClampSets from_table(const Table& table);
    bool allows(const Row& row, const Schema& schema) const;
};

/// Produces a full sentence (prompt included) continuing the prompt text.
/// Generators that sample tokens themselves honour `grammar` when given.
class TextGenerator {
public:
    virtual ~TextGenerator() = default;
    virtual std::string complete(const std::string& prompt, const SamplingConfig& cfg, std::uint64_t seed,
                                 const ClauseGrammar* grammar = nullptr) = 0;
};

/// Token-level temperature sampling from a frozen backend. Prompt tokens the
/// vocabulary lacks map to UNK. With a grammar, disallowed tokens get zero
/// probability and the rest are renormalized; a prompt that does not fit the
/// grammar is completed unconstrained.
class BackendGenerator final : public TextGenerator {
public:
    BackendGenerator(const GenerativeBackend& backend, std::string separator)
        : backend_(backend), separator_(std::move(separator)) {}

    std::string complete(const std::string& prompt, const SamplingConfig& cfg, std::uint64_t seed,
                         const ClauseGrammar* grammar = nullptr) override;

private:
    const GenerativeBackend& backend_;
    std::string separator_;
};

/// Draws an index from probabilities raised to 1/temperature.
std::size_t sample_index(const std::vector<double>& probs, double temperature, double uniform);

/// FeatureName: "<start> is "; OnePair/MultiPair: the clauses (MultiPair in
/// seed-random order) followed by the separator. The random start feature
/// is drawn from the feature columns.
std::string render_prompt(const Prompt& prompt, const Schema& schema, const CodecConfig& cfg, std::uint64_t seed);

struct RowOutcome {
    std::optional<Row> row;
    int attempts = 0;
    std::map<std::string, std::size_t> rejections;
};

/// Up to maxAttemptsPerRow generations for one row; attempt a uses seed
/// derive_seed(rowSeed, a). Prompted values are copied into the row.
RowOutcome sample_row(TextGenerator& generator, const Schema& schema, const Prompt& prompt,
                      const SamplingConfig& sampling, const CodecConfig& codec, const ClampSets* clamp,
                      std::uint64_t rowSeed);

struct SamplingReport {
    std::size_t requested = 0;
    std::size_t accepted = 0;
    std::size_t attempted = 0;
    std::size_t exhaustedSlots = 0;
    std::map<std::string, std::size_t> rejections;
    std::vector<int> attemptsPerRow;  // for accepted rows, in output order

    double acceptance_rate() const noexcept {
        return attempted == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempted);
    }
    nlohmann::json to_json() const;
};

struct SampleResult {
    Table table;  // feature columns only
    // Label text carried by each accepted generation (prompted or sampled),
    // aligned with table.rows. Scenarios decide whether to keep it.
    std::vector<std::optional<Cell>> labels;
    SamplingReport report;
};

/// Thrown when the global budget runs out; carries what was produced.
class SamplingFailure : public Error {
public:
    SamplingFailure(const std::string& message, SampleResult partial)
        : Error(ErrorKind::sampling, message), partial_(std::move(partial)) {}
    const SampleResult& partial() const noexcept { return partial_; }

private:
    SampleResult partial_;
};

/// Builds the prompt for output slot i.
using PromptSource = std::function<Prompt(std::size_t slot)>;

/// Generates exactly `count` accepted rows. Slot i draws with seed
/// derive_seed(sampling.seed, i); a slot that exhausts its attempts is
/// skipped. The whole run may spend count * maxAttemptsPerRow attempts.
SampleResult sample_table(TextGenerator& generator, const Schema& schema, const PromptSource& prompts,
                          std::size_t count, const SamplingConfig& sampling, const CodecConfig& codec,
                          const ClampSets* clamp);

SampleResult sample_table(TextGenerator& generator, const Schema& schema, const Prompt& prompt, std::size_t count,
                          const SamplingConfig& sampling, const CodecConfig& codec, const ClampSets* clamp);

/// Per-column fill values: median (lower middle of the sorted observed
/// numbers, original text kept) or mode (ties to the smaller text).
std::vector<Cell> fallback_fill(const Table& table);

struct ImputationReport {
    std::size_t incompleteRows = 0;
    std::size_t missingBefore = 0;
    std::size_t filledByModel = 0;
    std::size_t filledByFallback = 0;
    std::size_t attempted = 0;
    std::vector<std::size_t> fallbackRows;  // rows that needed any fallback
    std::size_t rowsWithoutObserved = 0;

    nlohmann::json to_json() const;
};

struct ImputeResult {
    Table table;
    ImputationReport report;
};

/// Fills only the missing feature cells. Each incomplete row gets a
/// MultiPair prompt of its observed cells (and its label when the codec
/// serializes labels); the attempt that fills the most cells wins and any
/// cell still missing falls back to `fill`.
ImputeResult impute_rows(TextGenerator& generator, const Table& table, const SamplingConfig& sampling,
                         const CodecConfig& codec, const std::vector<Cell>& fill, const ClampSets* clamp);

}  // namespace tabsynth
