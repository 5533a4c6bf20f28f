#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabsynth/backbone.hpp"
#include "tabsynth/codec.hpp"
#include "tabsynth/neural.hpp"
#include "tabsynth/ngram.hpp"
#include "tabsynth/sampler.hpp"
#include "tabsynth/table.hpp"

namespace tabsynth {

inline constexpr int kConfigVersion = 1;

/// One table listed in a manifest. Relative paths are resolved against the
/// manifest's directory when loaded.
struct DatasetEntry {
    std::string name;
    std::filesystem::path path;
    std::optional<std::string> label;
    Task task = Task::classification;
    std::uint64_t splitSeed = 0;
    double trainFraction = 0.75;

    Table load() const;
};

struct Manifest {
    std::vector<DatasetEntry> datasets;  // downstream tables
    std::vector<DatasetEntry> pretrain;  // pre-training corpus tables

    static Manifest from_json(const nlohmann::json& j, const std::filesystem::path& baseDir);
    static Manifest load(const std::filesystem::path& path);
    const DatasetEntry& dataset(const std::string& name) const;
};

struct BackendSettings {
    std::string kind = "ngram";  // ngram | neural | plugin:<cmd>
    NgramConfig ngram;
    NeuralConfig neural;
    int pretrainEpochs = 1;
    int finetuneSteps = 1;  // n-gram: any positive value adds the counts once
    int permutationsPerRow = 1;
    std::uint64_t pretrainSeed = 0;
};

struct BackboneSettings {
    std::string kind = "cart";  // cart | knn | plugin:<cmd>
    CartConfig cart;
    KnnConfig knn;
    int upweight = 1;
};

struct RunConfig {
    BackendSettings backend;
    BackboneSettings backbone;
    SamplingConfig sampling;  // seed is replaced per run seed
    bool labelFirst = false;  // OnePair with a sampled label instead of FeatureName
    CodecConfig codec;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    Mechanism mechanism = Mechanism::mcar;
    double missRatio = 0.3;
    std::optional<std::string> anchorColumn;
    std::size_t imbalanceRatio = 50;
    long syntheticRows = -1;  // -1: as many rows as the training table
    std::size_t coverageK = 5;

    nlohmann::json to_json() const;
    /// Unknown keys and wrong types are config errors; absent keys keep defaults.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
    void validate() const;
};

/// Parses JSON text, mapping syntax errors to config errors.
nlohmann::json parse_json(const std::string& text, const std::string& what);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace tabsynth
