#include "tabsynth/scenarios.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "tabsynth/checkpoint.hpp"
#include "tabsynth/error.hpp"
#include "tabsynth/labeling.hpp"
#include "tabsynth/metrics.hpp"
#include "tabsynth/neural.hpp"
#include "tabsynth/ngram.hpp"
#include "tabsynth/random.hpp"
#include "tabsynth/subprocess.hpp"

namespace tabsynth {

namespace {

// Stream ids for derive_seed, one per random decision in a seed's pipeline.
enum : std::uint64_t {
    kStreamFinetuneCorpus = 11,
    kStreamFinetune = 12,
    kStreamSampling = 13,
    kStreamLabelPrompt = 14,
    kStreamLmLabel = 15,
    kStreamMask = 21,
    kStreamImpute = 22,
    kStreamDownsample = 31,
    kStreamBalance = 32,
    kStreamPretrainCorpus = 41,
    kStreamPretrain = 42,
    kStreamInit = 43,
};

std::string codec_key(const CodecConfig& c) {
    return std::string(c.useCharacterNumbers ? "char" : "plain") + (c.useRealFeatureNames ? "-names" : "-dummy") +
           (c.includeLabel ? "-label" : "-nolabel");
}

std::string metric_name(const Table& train) {
    return train.schema.label && train.schema.label->task == Task::regression ? "r2" : "accuracy";
}

std::size_t altered_observed_cells(const Table& before, const Table& after) {
    std::size_t altered = 0;
    for (std::size_t i = 0; i < before.rows.size(); ++i) {
        const Row& a = before.rows[i];
        const Row& b = after.rows[i];
        for (std::size_t j = 0; j < a.cells.size(); ++j) {
            if (!a.cells[j].is_missing() && !(a.cells[j] == b.cells[j])) {
                ++altered;
            }
        }
        if (a.label != b.label) {
            ++altered;
        }
    }
    return altered;
}

std::string format_pm(double mean, double sd) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f +- %.4f", mean, sd);
    return buf;
}

}  // namespace

ScenarioKind parse_scenario(std::string_view text) {
    if (text == "privacy") {
        return ScenarioKind::privacy;
    }
    if (text == "low-resource") {
        return ScenarioKind::lowResource;
    }
    if (text == "imputation") {
        return ScenarioKind::imputation;
    }
    if (text == "imbalance") {
        return ScenarioKind::imbalance;
    }
    throw Error(ErrorKind::usage, "unknown scenario '" + std::string(text) +
                                      "' (expected privacy, low-resource, imputation or imbalance)");
}

std::string_view to_string(ScenarioKind kind) noexcept {
    switch (kind) {
        case ScenarioKind::privacy:
            return "privacy";
        case ScenarioKind::lowResource:
            return "low-resource";
        case ScenarioKind::imputation:
            return "imputation";
        case ScenarioKind::imbalance:
            return "imbalance";
    }
    return "?";
}

Toggle parse_toggle(std::string_view text) {
    if (text == "no-pretrain") {
        return Toggle::noPretrain;
    }
    if (text == "no-label") {
        return Toggle::noLabel;
    }
    if (text == "no-char") {
        return Toggle::noChar;
    }
    if (text == "no-names") {
        return Toggle::noNames;
    }
    throw Error(ErrorKind::usage, "unknown toggle '" + std::string(text) +
                                      "' (expected no-pretrain, no-label, no-char or no-names)");
}

std::string_view to_string(Toggle toggle) noexcept {
    switch (toggle) {
        case Toggle::noPretrain:
            return "no-pretrain";
        case Toggle::noLabel:
            return "no-label";
        case Toggle::noChar:
            return "no-char";
        case Toggle::noNames:
            return "no-names";
    }
    return "?";
}

ScenarioInputs load_inputs(const Manifest& manifest, const std::string& datasetName) {
    const DatasetEntry& entry = manifest.dataset(datasetName);
    if (!entry.label) {
        throw Error(ErrorKind::config, "dataset '" + entry.name + "' has no label column");
    }
    ScenarioInputs in;
    in.dataset = entry.name;
    Table table = entry.load();
    auto [train, test] = split(table, entry.trainFraction, entry.splitSeed);
    in.train = std::move(train);
    in.test = std::move(test);
    for (const auto& p : manifest.pretrain) {
        in.pretrainTables.push_back(p.load());
    }
    return in;
}

std::vector<std::string> serialize_table(const Table& table, const CodecConfig& codec, int permutations,
                                         std::uint64_t seed) {
    validate_codec(table.schema, codec);
    const std::size_t slots = slot_count(table.schema, codec);
    std::vector<std::string> out;
    out.reserve(table.rows.size() * static_cast<std::size_t>(permutations));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::uint64_t rowSeed = derive_seed(seed, i);
        for (int c = 0; c < permutations; ++c) {
            const auto perm = random_permutation(slots, derive_seed(rowSeed, static_cast<std::uint64_t>(c)));
            out.push_back(encode_row(table.rows[i], table.schema, perm, codec));
        }
    }
    return out;
}

std::unique_ptr<GenerativeBackend> make_backend(const BackendSettings& settings,
                                                const std::vector<std::string>& vocabularySentences,
                                                std::uint64_t initSeed) {
    if (settings.kind == "ngram") {
        return std::make_unique<NgramModel>(Vocabulary(), settings.ngram);
    }
    if (settings.kind == "neural") {
        // The separator is the fixed "," token, so any separator works here.
        return std::make_unique<TinyNeuralLM>(build_vocabulary(vocabularySentences, ", "), settings.neural, initSeed);
    }
    throw Error(ErrorKind::usage, "backend '" + settings.kind + "' has no in-process model");
}

std::vector<ArmSummary> ScenarioReport::summarize() const {
    std::vector<ArmSummary> out;
    std::vector<std::string> order;
    for (const auto& r : records) {
        if (std::find(order.begin(), order.end(), r.arm) == order.end()) {
            order.push_back(r.arm);
        }
    }
    for (const auto& arm : order) {
        std::vector<double> ref, syn, gap;
        for (const auto& r : records) {
            if (r.arm == arm) {
                ref.push_back(r.reference);
                syn.push_back(r.synthetic);
                gap.push_back(r.gap());
            }
        }
        out.push_back({arm, mean_of(ref), mean_of(syn), sample_std(syn), mean_of(gap), sample_std(gap)});
    }
    return out;
}

std::string ScenarioReport::to_jsonl() const {
    std::string out;
    for (const auto& r : records) {
        nlohmann::json j = {{"type", "record"},   {"scenario", scenario},   {"dataset", dataset},
                            {"arm", r.arm},       {"seed", r.seed},         {"metric", metric},
                            {"reference", r.reference}, {"synthetic", r.synthetic}, {"gap", r.gap()},
                            {"details", r.details}};
        out += j.dump() + "\n";
    }
    for (const auto& s : summarize()) {
        std::size_t n = 0;
        for (const auto& r : records) {
            n += r.arm == s.arm ? 1 : 0;
        }
        nlohmann::json j = {{"type", "summary"},
                            {"scenario", scenario},
                            {"dataset", dataset},
                            {"arm", s.arm},
                            {"metric", metric},
                            {"seeds", n},
                            {"reference_mean", s.referenceMean},
                            {"synthetic_mean", s.syntheticMean},
                            {"synthetic_std", s.syntheticStd},
                            {"gap_mean", s.gapMean},
                            {"gap_std", s.gapStd}};
        out += j.dump() + "\n";
    }
    nlohmann::json p = {{"type", "provenance"}, {"provenance", provenance}};
    out += p.dump() + "\n";
    return out;
}

std::string ScenarioReport::summary_table() const {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%s on %s (%s; gap = reference - synthetic)\n", scenario.c_str(),
                  dataset.c_str(), metric.c_str());
    out << line;
    std::snprintf(line, sizeof(line), "%-24s %-10s %-22s %-22s\n", "arm", "reference", "synthetic", "gap");
    out << line;
    for (const auto& s : summarize()) {
        std::snprintf(line, sizeof(line), "%-24s %-10.4f %-22s %-22s\n", s.arm.c_str(), s.referenceMean,
                      format_pm(s.syntheticMean, s.syntheticStd).c_str(), format_pm(s.gapMean, s.gapStd).c_str());
        out << line;
    }
    return out.str();
}

ScenarioRunner::ScenarioRunner(ScenarioInputs inputs, RunConfig config)
    : inputs_(std::move(inputs)), config_(std::move(config)) {
    config_.validate();
    if (!inputs_.train.schema.label) {
        throw Error(ErrorKind::data, "scenario tables need a label column");
    }
    inputs_.train.validate();
    inputs_.test.validate();
    if (!(inputs_.train.schema.columns == inputs_.test.schema.columns)) {
        throw Error(ErrorKind::data, "train and test tables have different columns");
    }
}

bool ScenarioRunner::plugin_backend() const {
    return config_.backend.kind.rfind("plugin:", 0) == 0;
}

ScenarioRunner::Arm ScenarioRunner::make_arm(const std::vector<Toggle>& toggles) const {
    Arm arm;
    arm.codec = config_.codec;
    std::string name;
    for (Toggle t : toggles) {
        name += (name.empty() ? "" : "+") + std::string(to_string(t));
        switch (t) {
            case Toggle::noPretrain:
                arm.pretrain = false;
                break;
            case Toggle::noLabel:
                arm.lmLabels = true;
                break;
            case Toggle::noChar:
                arm.codec.useCharacterNumbers = false;
                break;
            case Toggle::noNames:
                arm.codec.useRealFeatureNames = false;
                break;
        }
    }
    if (!name.empty()) {
        arm.name = name;
    }
    if (arm.lmLabels && !arm.codec.includeLabel) {
        throw Error(ErrorKind::config, "the no-label arm needs labels serialized (codec.include_label)");
    }
    return arm;
}

ScenarioReport ScenarioRunner::new_report(const std::string& scenario) const {
    ScenarioReport report;
    report.scenario = scenario;
    report.dataset = inputs_.dataset;
    report.metric = metric_name(inputs_.train);
    std::vector<std::string> pretrainIds;
    for (const auto& t : inputs_.pretrainTables) {
        pretrainIds.push_back(t.sourceId + ":" + content_hash(to_csv(t)));
    }
    report.provenance = {{"config", config_.to_json()},
                         {"train_hash", content_hash(to_csv(inputs_.train))},
                         {"test_hash", content_hash(to_csv(inputs_.test))},
                         {"train_rows", inputs_.train.size()},
                         {"test_rows", inputs_.test.size()},
                         {"pretrain_tables", pretrainIds}};
    return report;
}

const GenerativeBackend& ScenarioRunner::pretrained(const Arm& arm) {
    const std::string key = codec_key(arm.codec);
    auto it = pretrained_.find(key);
    if (it != pretrained_.end()) {
        return *it->second;
    }
    // Pre-training text always uses real names; only the number encoding
    // follows the arm.
    CodecConfig pretrainCodec = arm.codec;
    pretrainCodec.useRealFeatureNames = true;
    const std::uint64_t seed = config_.backend.pretrainSeed;
    std::vector<std::vector<std::string>> perTable;
    std::vector<std::string> all;
    for (std::size_t t = 0; t < inputs_.pretrainTables.size(); ++t) {
        const Table& table = inputs_.pretrainTables[t];
        CodecConfig c = pretrainCodec;
        c.includeLabel = pretrainCodec.includeLabel && table.schema.label.has_value();
        perTable.push_back(serialize_table(table, c, config_.backend.permutationsPerRow,
                                           derive_seed(derive_seed(seed, kStreamPretrainCorpus), t)));
        all.insert(all.end(), perTable.back().begin(), perTable.back().end());
    }
    std::vector<std::string> vocabText = all;
    const auto downstream = serialize_table(inputs_.train, arm.codec, 1, 0);
    vocabText.insert(vocabText.end(), downstream.begin(), downstream.end());
    auto backend = make_backend(config_.backend, vocabText, derive_seed(seed, kStreamInit));
    if (!all.empty()) {
        Corpus corpus;
        for (std::size_t t = 0; t < perTable.size(); ++t) {
            corpus.append(make_corpus(*backend, perTable[t], arm.codec.clauseSeparator,
                                      inputs_.pretrainTables[t].sourceId));
        }
        pretrain(*backend, corpus, config_.backend.pretrainEpochs, derive_seed(seed, kStreamPretrain));
    }
    checkpointHashes_[key] = content_hash(checkpoint_bytes(*backend));
    return *(pretrained_[key] = std::move(backend));
}

std::unique_ptr<GenerativeBackend> ScenarioRunner::tuned_backend(const Arm& arm, const Table& downstream,
                                                                 std::uint64_t seed) {
    if (plugin_backend()) {
        return nullptr;
    }
    std::unique_ptr<GenerativeBackend> backend;
    if (arm.pretrain) {
        backend = pretrained(arm).clone();
    } else {
        std::vector<std::string> vocabText;
        for (const auto& t : inputs_.pretrainTables) {
            CodecConfig c = arm.codec;
            c.useRealFeatureNames = true;
            c.includeLabel = c.includeLabel && t.schema.label.has_value();
            const auto s = serialize_table(t, c, 1, 0);
            vocabText.insert(vocabText.end(), s.begin(), s.end());
        }
        const auto s = serialize_table(inputs_.train, arm.codec, 1, 0);
        vocabText.insert(vocabText.end(), s.begin(), s.end());
        backend = make_backend(config_.backend, vocabText, derive_seed(config_.backend.pretrainSeed, kStreamInit));
    }
    const auto sentences = serialize_table(downstream, arm.codec, config_.backend.permutationsPerRow,
                                           derive_seed(seed, kStreamFinetuneCorpus));
    const Corpus corpus = make_corpus(*backend, sentences, arm.codec.clauseSeparator, downstream.sourceId);
    finetune(*backend, corpus, config_.backend.finetuneSteps, derive_seed(seed, kStreamFinetune));
    return backend;
}

std::unique_ptr<TextGenerator> ScenarioRunner::generator(const GenerativeBackend* backend, const CodecConfig& codec) {
    if (backend == nullptr) {
        return std::make_unique<PluginGenerator>(config_.backend.kind.substr(7));
    }
    return std::make_unique<BackendGenerator>(*backend, codec.clauseSeparator);
}

SeedRecord ScenarioRunner::privacy_seed(const Arm& arm, std::uint64_t seed, bool augment) {
    const Table& train = inputs_.train;
    const Table& test = inputs_.test;
    SeedRecord rec;
    rec.arm = arm.name;
    rec.seed = seed;

    auto reference = make_predictor(config_.backbone.kind, config_.backbone.cart, config_.backbone.knn);
    reference->fit(train);
    rec.reference = evaluate(*reference, test).value;

    const std::size_t count =
        config_.syntheticRows < 0 ? train.size() : static_cast<std::size_t>(config_.syntheticRows);
    Table labeled = train.with_rows({});
    labeled.sourceId = "synthetic";
    if (count > 0) {
        auto backend = tuned_backend(arm, train, seed);
        auto gen = generator(backend.get(), arm.codec);
        SamplingConfig sc = config_.sampling;
        sc.seed = derive_seed(seed, kStreamSampling);
        const ClampSets clamp = ClampSets::from_table(train);

        PromptSource prompts = [](std::size_t) { return Prompt{}; };
        if (config_.labelFirst && arm.codec.includeLabel) {
            const std::uint64_t labelSeed = derive_seed(seed, kStreamLabelPrompt);
            prompts = [&train, labelSeed](std::size_t slot) {
                Rng rng(derive_seed(labelSeed, slot));
                Prompt p;
                p.strategy = Strategy::onePair;
                p.pairs.push_back({train.schema.label->name, train.rows[rng.index(train.size())].label->text()});
                return p;
            };
        }
        auto sampled = sample_table(*gen, train.schema, prompts, count, sc, arm.codec, &clamp);
        rec.details["sampling"] = sampled.report.to_json();
        if (arm.lmLabels) {
            SamplingConfig lc = sc;
            lc.seed = derive_seed(seed, kStreamLmLabel);
            auto lm = lm_label_ablation(*gen, train.schema, sampled.table, lc, arm.codec, &clamp,
                                        majority_label(train));
            rec.details["lm_label_fallback_rows"] = lm.fallbackRows.size();
            labeled = std::move(lm.table);
        } else {
            labeled = label_synthetic(*reference, sampled.table);
        }
        const auto dcr = dcr_distribution(labeled, train);
        rec.details["dcr_mean"] = mean_of(dcr);
        if (!dcr.empty()) {
            std::vector<double> sorted = dcr;
            std::sort(sorted.begin(), sorted.end());
            rec.details["dcr_median"] = sorted[(sorted.size() - 1) / 2];
        }
        rec.details["dcr_zero_fraction"] =
            static_cast<double>(std::count(dcr.begin(), dcr.end(), 0.0)) / static_cast<double>(dcr.size());
        if (train.size() > config_.coverageK) {
            rec.details["coverage"] = coverage(train, labeled, config_.coverageK).value;
        }
    }
    rec.details["synthetic_rows"] = labeled.size();

    if (augment) {
        auto fit = train_with_augmentation(*reference, labeled, train, config_.backbone.upweight);
        rec.details["training"] = fit.semantics;
        rec.synthetic = evaluate(*fit.predictor, test).value;
    } else {
        auto model = reference->fresh();
        model->fit(labeled);
        rec.synthetic = evaluate(*model, test).value;
    }
    return rec;
}

SeedRecord ScenarioRunner::imputation_seed(std::uint64_t seed) {
    const Table& train = inputs_.train;
    const Table& test = inputs_.test;
    const Arm arm = make_arm({});
    SeedRecord rec;
    rec.seed = seed;

    MissingnessSpec spec;
    spec.mechanism = config_.mechanism;
    spec.missRatio = config_.missRatio;
    spec.seed = derive_seed(seed, kStreamMask);
    spec.anchorColumn = config_.anchorColumn;
    if (spec.mechanism == Mechanism::mar && !spec.anchorColumn) {
        for (const auto& c : train.schema.columns) {
            if (c.kind == ColumnKind::numerical) {
                spec.anchorColumn = c.name;
                break;
            }
        }
    }
    Table masked = apply_missingness(train, spec);
    masked.sourceId = train.sourceId + "-masked";
    const std::size_t maskedCells = count_missing_features(masked);
    const std::size_t maskable = maskable_cell_count(train, spec);

    auto reference = make_predictor(config_.backbone.kind, config_.backbone.cart, config_.backbone.knn);
    reference->fit(masked);
    rec.reference = evaluate(*reference, test).value;

    Table completed = masked;
    if (maskedCells > 0) {
        auto backend = tuned_backend(arm, masked, seed);
        auto gen = generator(backend.get(), arm.codec);
        SamplingConfig sc = config_.sampling;
        sc.seed = derive_seed(seed, kStreamImpute);
        const ClampSets clamp = ClampSets::from_table(masked);
        auto imputed = impute_rows(*gen, masked, sc, arm.codec, fallback_fill(masked), &clamp);
        rec.details["imputation"] = imputed.report.to_json();
        completed = std::move(imputed.table);
    }
    rec.details["mechanism"] = std::string(to_string(spec.mechanism));
    if (spec.anchorColumn) {
        rec.details["anchor"] = *spec.anchorColumn;
    }
    rec.details["masked_cells"] = maskedCells;
    rec.details["maskable_cells"] = maskable;
    rec.details["masked_fraction"] =
        maskable == 0 ? 0.0 : static_cast<double>(maskedCells) / static_cast<double>(maskable);
    rec.details["altered_observed_cells"] = altered_observed_cells(masked, completed);
    rec.details["remaining_missing"] = count_missing_features(completed);
    rec.details["reference_arm"] = "masked table, surrogate (median/mode) fill";

    auto model = reference->fresh();
    model->fit(completed);
    rec.synthetic = evaluate(*model, test).value;
    return rec;
}

SeedRecord ScenarioRunner::imbalance_seed(std::uint64_t seed) {
    const Table& train = inputs_.train;
    const Table& test = inputs_.test;
    const Arm arm = make_arm({});
    if (!arm.codec.includeLabel) {
        throw Error(ErrorKind::config, "the imbalance protocol prompts with the label; enable codec.include_label");
    }
    SeedRecord rec;
    rec.seed = seed;

    Table imbalanced = downsample_minority(train, config_.imbalanceRatio, derive_seed(seed, kStreamDownsample));
    imbalanced.sourceId = train.sourceId + "-imbalanced";
    const ClassBalance balance = class_balance(imbalanced);

    auto reference = make_predictor(config_.backbone.kind, config_.backbone.cart, config_.backbone.knn);
    reference->fit(imbalanced);
    rec.reference = evaluate_auc(*reference, test, balance.minority).value;

    const std::size_t need = balance.majorityCount - balance.minorityCount;
    Table balanced = imbalanced;
    std::size_t disagreements = 0;
    if (need > 0) {
        auto backend = tuned_backend(arm, imbalanced, seed);
        auto gen = generator(backend.get(), arm.codec);
        SamplingConfig sc = config_.sampling;
        sc.seed = derive_seed(seed, kStreamBalance);
        const ClampSets clamp = ClampSets::from_table(imbalanced);
        Prompt prompt;
        prompt.strategy = Strategy::onePair;
        prompt.pairs.push_back({train.schema.label->name, balance.minority});
        auto sampled = sample_table(*gen, train.schema, prompt, need, sc, arm.codec, &clamp);
        rec.details["sampling"] = sampled.report.to_json();
        const auto predicted = reference->predict(sampled.table);
        Table synth = imbalanced.with_rows({});
        for (std::size_t i = 0; i < sampled.table.rows.size(); ++i) {
            Row row = sampled.table.rows[i];
            row.label = Cell::category(balance.minority);
            disagreements += predicted[i].text() != balance.minority ? 1 : 0;
            synth.rows.push_back(std::move(row));
        }
        balanced = concatenate(imbalanced, synth);
    }
    const ClassBalance after = class_balance(balanced);
    rec.details["majority"] = balance.majority;
    rec.details["minority"] = balance.minority;
    rec.details["majority_rows"] = balance.majorityCount;
    rec.details["minority_rows_before"] = balance.minorityCount;
    rec.details["generated_rows"] = need;
    rec.details["majority_rows_after"] = after.majorityCount;
    rec.details["minority_rows_after"] = after.minorityCount;
    rec.details["backbone_disagreements"] = disagreements;
    rec.details["small_minority"] = balance.minorityCount < 10;

    auto model = reference->fresh();
    model->fit(balanced);
    rec.synthetic = evaluate_auc(*model, test, balance.minority).value;
    return rec;
}

ScenarioReport ScenarioRunner::run(ScenarioKind kind) {
    ScenarioReport report = new_report(std::string(to_string(kind)));
    if (kind == ScenarioKind::imbalance) {
        report.metric = "auc";
    }
    const Arm arm = make_arm({});
    for (std::uint64_t seed : config_.seeds) {
        try {
            switch (kind) {
                case ScenarioKind::privacy:
                    report.records.push_back(privacy_seed(arm, seed, false));
                    break;
                case ScenarioKind::lowResource:
                    report.records.push_back(privacy_seed(arm, seed, true));
                    break;
                case ScenarioKind::imputation:
                    report.records.push_back(imputation_seed(seed));
                    break;
                case ScenarioKind::imbalance:
                    report.records.push_back(imbalance_seed(seed));
                    break;
            }
        } catch (const Error& e) {
            throw Error(e.kind(), std::string(to_string(kind)) + " seed " + std::to_string(seed) + ": " + e.what());
        }
    }
    report.provenance["checkpoint_hashes"] = checkpointHashes_;
    return report;
}

ScenarioReport ScenarioRunner::run_ablation(const std::vector<Toggle>& toggles) {
    ScenarioReport report = new_report("ablation");
    std::vector<Arm> arms = {make_arm({})};
    std::vector<Toggle> seen;
    for (Toggle t : toggles) {
        if (std::find(seen.begin(), seen.end(), t) == seen.end()) {
            seen.push_back(t);
            arms.push_back(make_arm({t}));
        }
    }
    for (const Arm& arm : arms) {
        for (std::uint64_t seed : config_.seeds) {
            try {
                report.records.push_back(privacy_seed(arm, seed, false));
            } catch (const Error& e) {
                throw Error(e.kind(), "ablation arm " + arm.name + " seed " + std::to_string(seed) + ": " + e.what());
            }
        }
    }
    report.provenance["checkpoint_hashes"] = checkpointHashes_;
    return report;
}

}  // namespace tabsynth
