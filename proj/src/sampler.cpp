#include "tabsynth/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "tabsynth/random.hpp"

namespace tabsynth {

namespace {

// Slot index of a schema name: feature column, or schema.size() for the label.
std::optional<std::size_t> slot_of(const Schema& schema, std::string_view name) {
    if (auto idx = schema.find(name)) {
        return idx;
    }
    if (schema.is_label(name)) {
        return schema.size();
    }
    return std::nullopt;
}

ColumnKind slot_kind(const Schema& schema, std::size_t slot) {
    return slot < schema.size() ? schema.columns[slot].kind : schema.label_kind();
}

std::string render_clause(const Schema& schema, const std::vector<std::string>& names, const PromptPair& pair,
                          const CodecConfig& cfg) {
    const std::size_t slot = *slot_of(schema, pair.feature);
    if (slot >= names.size()) {
        throw Error(ErrorKind::usage, "prompt names the label '" + pair.feature +
                                          "' but the codec does not serialize labels");
    }
    return names[slot] + std::string(kIsMarker) + render_value(pair.value, slot_kind(schema, slot), cfg);
}

// Writes a prompted value into the row, overriding whatever was generated.
void copy_prompt_value(Row& row, const Schema& schema, const PromptPair& pair) {
    const std::size_t slot = *slot_of(schema, pair.feature);
    auto cell = Cell::from_text(pair.value, slot_kind(schema, slot));
    if (!cell || cell->is_missing()) {
        throw Error(ErrorKind::usage, "prompt value '" + pair.value + "' is not valid for '" + pair.feature + "'");
    }
    if (slot < schema.size()) {
        row.cells[slot] = *cell;
    } else {
        row.label = *cell;
    }
}

bool allowed(const std::set<std::string>& values, const Cell& cell) {
    return values.empty() || cell.is_missing() || values.count(cell.text()) > 0;
}

}  // namespace

Strategy parse_strategy(std::string_view text) {
    if (text == "feature-name") {
        return Strategy::featureName;
    }
    if (text == "one-pair") {
        return Strategy::onePair;
    }
    if (text == "multi-pair") {
        return Strategy::multiPair;
    }
    throw Error(ErrorKind::usage, "unknown prompt strategy '" + std::string(text) +
                                      "' (expected feature-name, one-pair or multi-pair)");
}

std::string_view to_string(Strategy strategy) noexcept {
    switch (strategy) {
        case Strategy::featureName:
            return "feature-name";
        case Strategy::onePair:
            return "one-pair";
        case Strategy::multiPair:
            return "multi-pair";
    }
    return "?";
}

void Prompt::validate(const Schema& schema) const {
    switch (strategy) {
        case Strategy::featureName:
            if (!pairs.empty()) {
                throw Error(ErrorKind::usage, "feature-name prompts carry no pairs");
            }
            break;
        case Strategy::onePair:
            if (pairs.size() != 1) {
                throw Error(ErrorKind::usage, "one-pair prompts carry exactly one pair");
            }
            break;
        case Strategy::multiPair:
            if (pairs.empty()) {
                throw Error(ErrorKind::usage, "multi-pair prompts need at least one pair");
            }
            break;
    }
    std::set<std::string> seen;
    for (const auto& p : pairs) {
        if (!slot_of(schema, p.feature)) {
            throw Error(ErrorKind::usage, "prompt names unknown feature '" + p.feature + "'");
        }
        if (!seen.insert(p.feature).second) {
            throw Error(ErrorKind::usage, "prompt names feature '" + p.feature + "' twice");
        }
    }
    if (startFeature && !schema.find(*startFeature)) {
        throw Error(ErrorKind::usage, "unknown start feature '" + *startFeature + "'");
    }
}

void SamplingConfig::validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw Error(ErrorKind::config, "temperature must be positive");
    }
    if (maxTokens < 1) {
        throw Error(ErrorKind::config, "max tokens must be at least 1");
    }
    if (maxAttemptsPerRow < 1) {
        throw Error(ErrorKind::config, "max attempts per row must be at least 1");
    }
}

ClampSets ClampSets::from_table(const Table& table) {
    ClampSets sets;
    sets.values.resize(table.schema.size() + 1);
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.cells.size(); ++j) {
            if (table.schema.columns[j].kind == ColumnKind::categorical && !row.cells[j].is_missing()) {
                sets.values[j].insert(row.cells[j].text());
            }
        }
        if (row.label && table.schema.label && table.schema.label->task == Task::classification) {
            sets.values[table.schema.size()].insert(row.label->text());
        }
    }
    return sets;
}

bool ClampSets::allows(const Row& row, const Schema& schema) const {
    for (std::size_t j = 0; j < row.cells.size() && j < values.size(); ++j) {
        if (schema.columns[j].kind == ColumnKind::categorical && !allowed(values[j], row.cells[j])) {
            return false;
        }
    }
    if (row.label && schema.label && schema.label->task == Task::classification && values.size() > schema.size()) {
        return allowed(values[schema.size()], *row.label);
    }
    return true;
}

std::size_t sample_index(const std::vector<double>& probs, double temperature, double uniform) {
    std::vector<double> w(probs.size());
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        w[i] = temperature == 1.0 ? probs[i] : std::pow(probs[i], 1.0 / temperature);
        total += w[i];
    }
    if (!(total > 0.0)) {
        throw Error(ErrorKind::sampling, "next-token distribution has no mass");
    }
    double target = uniform * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
        target -= w[i];
        if (target < 0.0) {
            return i;
        }
    }
    // Rounding left a sliver of mass: take the last token with weight.
    for (std::size_t i = w.size(); i-- > 0;) {
        if (w[i] > 0.0) {
            return i;
        }
    }
    return 0;
}

ClauseGrammar ClauseGrammar::for_schema(const Schema& schema, const CodecConfig& codec, bool requireLabel) {
    ClauseGrammar g;
    const auto names = rendered_names(schema, codec);
    for (std::size_t slot = 0; slot < names.size(); ++slot) {
        g.names.push_back(tokenize(names[slot], codec.clauseSeparator));
        g.required.push_back(slot < schema.size() || requireLabel);
    }
    return g;
}

namespace {

// Tracks where decoding is inside "name is value, name is value" and which
// tokens may come next.
class GrammarState {
public:
    GrammarState(const ClauseGrammar& g, const Vocabulary& vocab)
        : g_(g), vocab_(vocab), used_(g.names.size(), false) {
        start_clause();
    }

    bool allowed(TokenId id) const {
        if (id == special::bosId || id == special::unkId) {
            return false;
        }
        if (inName_) {
            const std::string& tok = vocab_.token(id);
            for (std::size_t c : candidates_) {
                const auto& name = g_.names[c];
                if (namePos_ < name.size() ? name[namePos_] == tok : id == special::isId) {
                    return true;
                }
            }
            return false;
        }
        if (id == special::sepId || id == special::eosId) {
            if (valueTokens_ == 0 || quoteOpen_) {
                return id == special::sepId && quoteOpen_;
            }
            return id == special::sepId ? any_unused() : all_required_used();
        }
        return true;
    }

    void push(TokenId id) {
        if (inName_) {
            if (id == special::isId) {
                for (std::size_t c : candidates_) {
                    if (g_.names[c].size() == namePos_) {
                        used_[c] = true;
                        break;
                    }
                }
                inName_ = false;
                valueTokens_ = 0;
                quoteOpen_ = false;
                return;
            }
            const std::string& tok = vocab_.token(id);
            std::vector<std::size_t> next;
            for (std::size_t c : candidates_) {
                if (namePos_ < g_.names[c].size() && g_.names[c][namePos_] == tok) {
                    next.push_back(c);
                }
            }
            candidates_ = std::move(next);
            ++namePos_;
            return;
        }
        if (id == special::sepId && !quoteOpen_) {
            start_clause();
            return;
        }
        ++valueTokens_;
        const std::string& tok = id == special::sepId ? std::string(special::sep) : vocab_.token(id);
        if (std::count(tok.begin(), tok.end(), '"') % 2 == 1) {
            quoteOpen_ = !quoteOpen_;
        }
    }

private:
    void start_clause() {
        inName_ = true;
        namePos_ = 0;
        candidates_.clear();
        for (std::size_t c = 0; c < used_.size(); ++c) {
            if (!used_[c]) {
                candidates_.push_back(c);
            }
        }
    }

    bool any_unused() const { return std::find(used_.begin(), used_.end(), false) != used_.end(); }

    bool all_required_used() const {
        for (std::size_t c = 0; c < used_.size(); ++c) {
            if (g_.required[c] && !used_[c]) {
                return false;
            }
        }
        return true;
    }

    const ClauseGrammar& g_;
    const Vocabulary& vocab_;
    std::vector<bool> used_;
    std::vector<std::size_t> candidates_;
    std::size_t namePos_ = 0;
    bool inName_ = true;
    std::size_t valueTokens_ = 0;
    bool quoteOpen_ = false;
};

}  // namespace

std::string BackendGenerator::complete(const std::string& prompt, const SamplingConfig& cfg, std::uint64_t seed,
                                       const ClauseGrammar* grammar) {
    const Vocabulary& vocab = backend_.vocabulary();
    std::vector<std::string> tokens = tokenize(prompt, separator_);
    auto decoder = backend_.start();
    decoder->push(special::bosId);
    std::optional<GrammarState> state;
    if (grammar != nullptr) {
        state.emplace(*grammar, vocab);
    }
    for (const auto& t : tokens) {
        const TokenId id = vocab.id(t);
        decoder->push(id);
        if (state) {
            if (state->allowed(id)) {
                state->push(id);
            } else {
                state.reset();
            }
        }
    }
    Rng rng(seed);
    for (int step = 0; step < cfg.maxTokens; ++step) {
        std::vector<double> dist = decoder->distribution();
        if (state) {
            double mass = 0.0;
            std::size_t open = 0;
            for (std::size_t i = 0; i < dist.size(); ++i) {
                if (state->allowed(static_cast<TokenId>(i))) {
                    mass += dist[i];
                    ++open;
                } else {
                    dist[i] = 0.0;
                }
            }
            if (open == 0) {
                break;
            }
            if (!(mass > 0.0)) {
                for (std::size_t i = 0; i < dist.size(); ++i) {
                    dist[i] = state->allowed(static_cast<TokenId>(i)) ? 1.0 : 0.0;
                }
            }
        }
        const double u = rng.uniform();
        const auto id = static_cast<TokenId>(sample_index(dist, cfg.temperature, u));
        if (id == special::eosId) {
            break;
        }
        if (state) {
            state->push(id);
        }
        tokens.push_back(vocab.token(id));
        decoder->push(id);
    }
    return detokenize(tokens, separator_);
}

std::string render_prompt(const Prompt& prompt, const Schema& schema, const CodecConfig& cfg, std::uint64_t seed) {
    const auto names = rendered_names(schema, cfg);
    if (prompt.strategy == Strategy::featureName) {
        std::size_t slot = 0;
        if (prompt.startFeature) {
            slot = *schema.find(*prompt.startFeature);
        } else {
            if (schema.size() == 0) {
                throw Error(ErrorKind::usage, "cannot prompt a table without feature columns");
            }
            Rng rng(seed);
            slot = rng.index(schema.size());
        }
        return names[slot] + std::string(kIsMarker);
    }
    std::vector<std::size_t> order(prompt.pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    if (prompt.strategy == Strategy::multiPair) {
        Rng rng(seed);
        rng.shuffle(std::span<std::size_t>(order));
    }
    std::string out;
    for (std::size_t i : order) {
        out += render_clause(schema, names, prompt.pairs[i], cfg);
        out += cfg.clauseSeparator;
    }
    return out;
}

RowOutcome sample_row(TextGenerator& generator, const Schema& schema, const Prompt& prompt,
                      const SamplingConfig& sampling, const CodecConfig& codec, const ClampSets* clamp,
                      std::uint64_t rowSeed) {
    RowOutcome outcome;
    std::optional<ClauseGrammar> grammar;
    if (sampling.constrained) {
        grammar = ClauseGrammar::for_schema(schema, codec);
    }
    for (int a = 0; a < sampling.maxAttemptsPerRow; ++a) {
        const std::uint64_t seed = derive_seed(rowSeed, static_cast<std::uint64_t>(a));
        ++outcome.attempts;
        const std::string text =
            generator.complete(render_prompt(prompt, schema, codec, seed), sampling, seed, grammar ? &*grammar : nullptr);
        auto decoded = decode_row(parse_sentence(text, schema, codec), schema, DecodePolicy::strict);
        if (!decoded) {
            ++outcome.rejections[decoded.rejection.reason];
            continue;
        }
        Row row = std::move(*decoded.row);
        for (const auto& pair : prompt.pairs) {
            copy_prompt_value(row, schema, pair);
        }
        if (sampling.categoricalClamp && clamp != nullptr && !clamp->allows(row, schema)) {
            ++outcome.rejections["clamp-violation"];
            continue;
        }
        outcome.row = std::move(row);
        break;
    }
    return outcome;
}

nlohmann::json SamplingReport::to_json() const {
    return {{"requested", requested},
            {"accepted", accepted},
            {"attempted", attempted},
            {"acceptance_rate", acceptance_rate()},
            {"exhausted_slots", exhaustedSlots},
            {"rejections", rejections},
            {"attempts_per_row", attemptsPerRow}};
}

SampleResult sample_table(TextGenerator& generator, const Schema& schema, const PromptSource& prompts,
                          std::size_t count, const SamplingConfig& sampling, const CodecConfig& codec,
                          const ClampSets* clamp) {
    sampling.validate();
    validate_codec(schema, codec);
    if (count == 0) {
        throw Error(ErrorKind::usage, "sample count must be at least 1");
    }
    SampleResult result;
    result.table.schema = schema.without_label();
    result.table.sourceId = "synthetic";
    result.report.requested = count;
    const std::size_t budget = count * static_cast<std::size_t>(sampling.maxAttemptsPerRow);
    for (std::size_t slot = 0; result.report.accepted < count && result.report.attempted < budget; ++slot) {
        const Prompt prompt = prompts(slot);
        prompt.validate(schema);
        SamplingConfig slotCfg = sampling;
        slotCfg.maxAttemptsPerRow = static_cast<int>(
            std::min<std::size_t>(static_cast<std::size_t>(sampling.maxAttemptsPerRow), budget - result.report.attempted));
        auto outcome = sample_row(generator, schema, prompt, slotCfg, codec, clamp, derive_seed(sampling.seed, slot));
        result.report.attempted += static_cast<std::size_t>(outcome.attempts);
        for (const auto& [reason, n] : outcome.rejections) {
            result.report.rejections[reason] += n;
        }
        if (!outcome.row) {
            ++result.report.exhaustedSlots;
            continue;
        }
        result.labels.push_back(outcome.row->label);
        outcome.row->label.reset();
        result.table.rows.push_back(std::move(*outcome.row));
        result.report.attemptsPerRow.push_back(outcome.attempts);
        ++result.report.accepted;
    }
    if (result.report.accepted < count) {
        const std::string msg = "attempt budget exhausted after " + std::to_string(result.report.attempted) +
                                " attempts with " + std::to_string(result.report.accepted) + " of " +
                                std::to_string(count) + " rows accepted";
        throw SamplingFailure(msg, std::move(result));
    }
    return result;
}

SampleResult sample_table(TextGenerator& generator, const Schema& schema, const Prompt& prompt, std::size_t count,
                          const SamplingConfig& sampling, const CodecConfig& codec, const ClampSets* clamp) {
    return sample_table(generator, schema, [&prompt](std::size_t) { return prompt; }, count, sampling, codec, clamp);
}

std::vector<Cell> fallback_fill(const Table& table) {
    std::vector<Cell> fill(table.schema.size());
    for (std::size_t j = 0; j < table.schema.size(); ++j) {
        if (table.schema.columns[j].kind == ColumnKind::numerical) {
            std::vector<const Cell*> observed;
            for (const auto& row : table.rows) {
                if (!row.cells[j].is_missing()) {
                    observed.push_back(&row.cells[j]);
                }
            }
            if (observed.empty()) {
                continue;
            }
            std::sort(observed.begin(), observed.end(), [](const Cell* a, const Cell* b) {
                return a->value() != b->value() ? a->value() < b->value() : a->text() < b->text();
            });
            fill[j] = *observed[(observed.size() - 1) / 2];
        } else {
            std::map<std::string, std::size_t> counts;
            for (const auto& row : table.rows) {
                if (!row.cells[j].is_missing()) {
                    ++counts[row.cells[j].text()];
                }
            }
            const std::string* best = nullptr;
            std::size_t bestCount = 0;
            for (const auto& [value, n] : counts) {
                if (n > bestCount) {
                    best = &value;
                    bestCount = n;
                }
            }
            if (best != nullptr) {
                fill[j] = Cell::category(*best);
            }
        }
    }
    return fill;
}

nlohmann::json ImputationReport::to_json() const {
    return {{"incomplete_rows", incompleteRows},
            {"missing_before", missingBefore},
            {"filled_by_model", filledByModel},
            {"filled_by_fallback", filledByFallback},
            {"attempted", attempted},
            {"fallback_rows", fallbackRows},
            {"rows_without_observed", rowsWithoutObserved}};
}

ImputeResult impute_rows(TextGenerator& generator, const Table& table, const SamplingConfig& sampling,
                         const CodecConfig& codec, const std::vector<Cell>& fill, const ClampSets* clamp) {
    sampling.validate();
    validate_codec(table.schema, codec);
    if (fill.size() != table.schema.size()) {
        throw Error(ErrorKind::usage, "fallback fill does not match the table width");
    }
    const Schema& schema = table.schema;
    const bool promptLabel = codec.includeLabel && schema.label.has_value();
    const ClauseGrammar grammar = ClauseGrammar::for_schema(schema, codec);
    ImputeResult result;
    result.table = table;
    result.report.missingBefore = count_missing_features(table);

    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const Row& original = table.rows[i];
        std::vector<std::size_t> missing;
        Prompt prompt;
        prompt.strategy = Strategy::multiPair;
        for (std::size_t j = 0; j < original.cells.size(); ++j) {
            if (original.cells[j].is_missing()) {
                missing.push_back(j);
            } else {
                prompt.pairs.push_back({schema.columns[j].name, original.cells[j].text()});
            }
        }
        if (missing.empty()) {
            continue;
        }
        ++result.report.incompleteRows;
        Row& out = result.table.rows[i];

        std::vector<std::optional<Cell>> best(missing.size());
        std::size_t bestFilled = 0;
        if (prompt.pairs.empty()) {
            ++result.report.rowsWithoutObserved;
        } else {
            if (promptLabel && original.label && !original.label->is_missing()) {
                prompt.pairs.push_back({schema.label->name, original.label->text()});
            }
            const std::uint64_t rowSeed = derive_seed(sampling.seed, i);
            for (int a = 0; a < sampling.maxAttemptsPerRow && bestFilled < missing.size(); ++a) {
                const std::uint64_t seed = derive_seed(rowSeed, static_cast<std::uint64_t>(a));
                ++result.report.attempted;
                const std::string text = generator.complete(render_prompt(prompt, schema, codec, seed), sampling, seed,
                                                            sampling.constrained ? &grammar : nullptr);
                auto decoded = decode_row(parse_sentence(text, schema, codec), schema, DecodePolicy::partial);
                if (!decoded) {
                    continue;
                }
                std::vector<std::optional<Cell>> candidate(missing.size());
                std::size_t filled = 0;
                for (std::size_t k = 0; k < missing.size(); ++k) {
                    const Cell& c = decoded.row->cells[missing[k]];
                    if (c.is_missing()) {
                        continue;
                    }
                    if (sampling.categoricalClamp && clamp != nullptr &&
                        schema.columns[missing[k]].kind == ColumnKind::categorical &&
                        !allowed(clamp->values[missing[k]], c)) {
                        continue;
                    }
                    candidate[k] = c;
                    ++filled;
                }
                if (filled > bestFilled) {
                    bestFilled = filled;
                    best = std::move(candidate);
                }
            }
        }
        bool usedFallback = false;
        for (std::size_t k = 0; k < missing.size(); ++k) {
            const std::size_t j = missing[k];
            if (best[k]) {
                out.cells[j] = *best[k];
                ++result.report.filledByModel;
            } else {
                if (fill[j].is_missing()) {
                    throw Error(ErrorKind::data, "column '" + schema.columns[j].name +
                                                     "' has no observed value to fall back on");
                }
                out.cells[j] = fill[j];
                ++result.report.filledByFallback;
                usedFallback = true;
            }
        }
        if (usedFallback) {
            result.report.fallbackRows.push_back(i);
        }
    }
    return result;
}

}  // namespace tabsynth
