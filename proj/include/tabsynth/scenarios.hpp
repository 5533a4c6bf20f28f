#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabsynth/backend.hpp"
#include "tabsynth/config.hpp"
#include "tabsynth/table.hpp"

namespace tabsynth {

enum class ScenarioKind { privacy, lowResource, imputation, imbalance };

ScenarioKind parse_scenario(std::string_view text);
std::string_view to_string(ScenarioKind kind) noexcept;

enum class Toggle { noPretrain, noLabel, noChar, noNames };

Toggle parse_toggle(std::string_view text);
std::string_view to_string(Toggle toggle) noexcept;

/// Everything a scenario run reads: the labeled downstream split and the
/// tables of the pre-training corpus.
struct ScenarioInputs {
    std::string dataset;
    Table train;
    Table test;
    std::vector<Table> pretrainTables;
};

/// Loads the manifest dataset, splits it with its split seed and loads the
/// pre-training tables.
ScenarioInputs load_inputs(const Manifest& manifest, const std::string& datasetName);

/// Serializes every row of `table` `permutations` times, each with a fresh
/// permutation seeded from (seed, row, copy). Labels are included per codec.
std::vector<std::string> serialize_table(const Table& table, const CodecConfig& codec, int permutations,
                                         std::uint64_t seed);

/// Untrained backend of the configured kind. The neural vocabulary is built
/// from `vocabularySentences`; the n-gram vocabulary grows on demand.
std::unique_ptr<GenerativeBackend> make_backend(const BackendSettings& settings,
                                                const std::vector<std::string>& vocabularySentences,
                                                std::uint64_t initSeed);

/// One machine-readable record per arm and seed.
struct SeedRecord {
    std::string arm = "full";
    std::uint64_t seed = 0;
    double reference = 0.0;
    double synthetic = 0.0;
    nlohmann::json details;  // sampling / imputation / imbalance bookkeeping

    double gap() const noexcept { return reference - synthetic; }
};

struct ArmSummary {
    std::string arm;
    double referenceMean = 0.0;
    double syntheticMean = 0.0;
    double syntheticStd = 0.0;
    double gapMean = 0.0;
    double gapStd = 0.0;
};

struct ScenarioReport {
    std::string scenario;
    std::string dataset;
    std::string metric;
    std::vector<SeedRecord> records;
    nlohmann::json provenance;

    std::vector<ArmSummary> summarize() const;

    /// One JSON object per line: records in run order, then one summary line
    /// per arm, then the provenance line.
    std::string to_jsonl() const;
    /// Fixed-width table of the arm summaries.
    std::string summary_table() const;
};

/// Shared per-run state: the pre-trained backends (one per codec setting)
/// are built once and reused across seeds.
class ScenarioRunner {
public:
    ScenarioRunner(ScenarioInputs inputs, RunConfig config);

    ScenarioReport run(ScenarioKind kind);
    ScenarioReport run_privacy() { return run(ScenarioKind::privacy); }
    ScenarioReport run_low_resource() { return run(ScenarioKind::lowResource); }
    ScenarioReport run_imputation() { return run(ScenarioKind::imputation); }
    ScenarioReport run_imbalance() { return run(ScenarioKind::imbalance); }

    /// Privacy protocol under the full arm plus each toggle arm.
    ScenarioReport run_ablation(const std::vector<Toggle>& toggles);

    const RunConfig& config() const noexcept { return config_; }
    const ScenarioInputs& inputs() const noexcept { return inputs_; }

private:
    struct Arm {
        std::string name = "full";
        bool pretrain = true;
        bool lmLabels = false;
        CodecConfig codec;
    };

    SeedRecord privacy_seed(const Arm& arm, std::uint64_t seed, bool augment);
    SeedRecord imputation_seed(std::uint64_t seed);
    SeedRecord imbalance_seed(std::uint64_t seed);

    /// Pre-trained (or fresh) backend for the arm, fine-tuned on `downstream`.
    std::unique_ptr<GenerativeBackend> tuned_backend(const Arm& arm, const Table& downstream, std::uint64_t seed);
    const GenerativeBackend& pretrained(const Arm& arm);
    std::unique_ptr<TextGenerator> generator(const GenerativeBackend* backend, const CodecConfig& codec);

    Arm make_arm(const std::vector<Toggle>& toggles) const;
    ScenarioReport new_report(const std::string& scenario) const;
    bool plugin_backend() const;

    ScenarioInputs inputs_;
    RunConfig config_;
    std::map<std::string, std::unique_ptr<GenerativeBackend>> pretrained_;
    std::map<std::string, std::string> checkpointHashes_;
};

}  // namespace tabsynth
