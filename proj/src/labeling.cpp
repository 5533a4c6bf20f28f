#include "tabsynth/labeling.hpp"

#include <algorithm>
#include <map>

#include "tabsynth/random.hpp"

namespace tabsynth {

LmLabelResult lm_label_ablation(TextGenerator& generator, const Schema& schema, const Table& synthFeatures,
                                const SamplingConfig& sampling, const CodecConfig& codec, const ClampSets* clamp,
                                const Cell& fallback) {
    if (!schema.label) {
        throw Error(ErrorKind::usage, "LM labeling needs a labeled schema");
    }
    if (!codec.includeLabel) {
        throw Error(ErrorKind::config, "LM labeling needs the label serialized during fine-tuning");
    }
    sampling.validate();
    const std::size_t labelSlot = schema.size();
    const ClauseGrammar grammar = ClauseGrammar::for_schema(schema, codec, true);
    LmLabelResult result;
    result.table.schema = schema;
    result.table.sourceId = synthFeatures.sourceId;
    for (std::size_t i = 0; i < synthFeatures.rows.size(); ++i) {
        const Row& features = synthFeatures.rows[i];
        Prompt prompt;
        prompt.strategy = Strategy::multiPair;
        for (std::size_t j = 0; j < features.cells.size(); ++j) {
            if (!features.cells[j].is_missing()) {
                prompt.pairs.push_back({schema.columns[j].name, features.cells[j].text()});
            }
        }
        std::optional<Cell> label;
        const std::uint64_t rowSeed = derive_seed(sampling.seed, i);
        for (int a = 0; a < sampling.maxAttemptsPerRow && !label && !prompt.pairs.empty(); ++a) {
            const std::uint64_t seed = derive_seed(rowSeed, static_cast<std::uint64_t>(a));
            const std::string text = generator.complete(render_prompt(prompt, schema, codec, seed), sampling, seed,
                                                        sampling.constrained ? &grammar : nullptr);
            const auto decoded = decode_row(parse_sentence(text, schema, codec), schema, DecodePolicy::partial);
            if (!decoded || !decoded.row->label) {
                continue;
            }
            const Cell& candidate = *decoded.row->label;
            if (sampling.categoricalClamp && clamp != nullptr && schema.label->task == Task::classification &&
                clamp->values.size() > labelSlot && !clamp->values[labelSlot].empty() &&
                clamp->values[labelSlot].count(candidate.text()) == 0) {
                continue;
            }
            label = candidate;
        }
        Row row = features;
        if (label) {
            row.label = *label;
        } else {
            row.label = fallback;
            result.fallbackRows.push_back(i);
        }
        result.table.rows.push_back(std::move(row));
    }
    return result;
}

Cell majority_label(const Table& train) {
    if (!train.schema.label || train.rows.empty()) {
        throw Error(ErrorKind::data, "majority label needs a labeled, non-empty table");
    }
    if (train.schema.label->task == Task::classification) {
        std::map<std::string, std::size_t> counts;
        for (const auto& row : train.rows) {
            ++counts[row.label->text()];
        }
        auto best = counts.begin();
        for (auto it = counts.begin(); it != counts.end(); ++it) {
            if (it->second > best->second) {
                best = it;
            }
        }
        return Cell::category(best->first);
    }
    std::vector<const Cell*> labels;
    for (const auto& row : train.rows) {
        labels.push_back(&*row.label);
    }
    std::sort(labels.begin(), labels.end(), [](const Cell* a, const Cell* b) {
        return a->value() != b->value() ? a->value() < b->value() : a->text() < b->text();
    });
    return *labels[(labels.size() - 1) / 2];
}

}  // namespace tabsynth
