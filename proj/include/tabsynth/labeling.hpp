#pragma once

#include <cstddef>
#include <vector>

#include "tabsynth/sampler.hpp"

namespace tabsynth {

struct LmLabelResult {
    Table table;                         // features plus LM-decoded labels
    std::vector<std::size_t> fallbackRows;  // rows labeled with the fallback
};

/// Labels synthetic rows with the language model itself: every feature value
/// goes into a MultiPair prompt and the label clause of the completion is
/// read back. Rows whose label never decodes (or breaks the clamp) get
/// `fallback`, normally the majority training label.
LmLabelResult lm_label_ablation(TextGenerator& generator, const Schema& schema, const Table& synthFeatures,
                                const SamplingConfig& sampling, const CodecConfig& codec, const ClampSets* clamp,
                                const Cell& fallback);

/// Most frequent label (ties to the smaller text) for classification, or
/// the lower median for regression.
Cell majority_label(const Table& train);

}  // namespace tabsynth
