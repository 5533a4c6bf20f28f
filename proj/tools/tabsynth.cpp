// tabsynth: command-line front end for corpus building, LM training,
// sampling, imputation, balancing and scenario benchmarks.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tabsynth/backbone.hpp"
#include "tabsynth/checkpoint.hpp"
#include "tabsynth/config.hpp"
#include "tabsynth/error.hpp"
#include "tabsynth/labeling.hpp"
#include "tabsynth/metrics.hpp"
#include "tabsynth/random.hpp"
#include "tabsynth/sampler.hpp"
#include "tabsynth/scenarios.hpp"
#include "tabsynth/subprocess.hpp"

using namespace tabsynth;
namespace fs = std::filesystem;

namespace {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level() {
    const char* env = std::getenv("TABSYNTH_LOG");
    const std::string v = env ? env : "warn";
    if (v == "error") {
        return LogLevel::error;
    }
    if (v == "info") {
        return LogLevel::info;
    }
    if (v == "debug") {
        return LogLevel::debug;
    }
    return LogLevel::warn;
}

void log(LogLevel level, const std::string& message) {
    static const LogLevel threshold = log_level();
    if (level <= threshold) {
        static const char* names[] = {"error", "warn", "info", "debug"};
        std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << "\n";
    }
}

// Options shared by every subcommand.
struct Globals {
    std::uint64_t seed = 0;
    std::string configPath;
    std::string backend;
    std::string backbone;
    std::optional<double> temperature;
    bool clamp = false;
    std::string strategy;
    std::vector<std::string> toggles;
};

RunConfig resolve_config(const Globals& g) {
    RunConfig cfg = g.configPath.empty() ? RunConfig{} : RunConfig::load(g.configPath);
    if (!g.backend.empty()) {
        cfg.backend.kind = g.backend;
    }
    if (!g.backbone.empty()) {
        cfg.backbone.kind = g.backbone;
    }
    if (g.temperature) {
        cfg.sampling.temperature = *g.temperature;
    }
    if (g.clamp) {
        cfg.sampling.categoricalClamp = true;
    }
    if (!g.strategy.empty()) {
        const Strategy s = parse_strategy(g.strategy);
        if (s == Strategy::multiPair) {
            throw Error(ErrorKind::usage, "multi-pair prompting is used by imputation only");
        }
        cfg.labelFirst = s == Strategy::onePair;
    }
    for (const auto& t : g.toggles) {
        switch (parse_toggle(t)) {
            case Toggle::noChar:
                cfg.codec.useCharacterNumbers = false;
                break;
            case Toggle::noNames:
                cfg.codec.useRealFeatureNames = false;
                break;
            default:
                break;
        }
    }
    cfg.sampling.seed = g.seed;
    cfg.validate();
    return cfg;
}

Table load_table(const std::string& path, const std::string& label, const std::string& task) {
    LoadOptions opts;
    if (!label.empty()) {
        opts.labelColumn = label;
    }
    opts.task = parse_task(task);
    return load_csv(path, opts);
}

void write_provenance(const fs::path& out, nlohmann::json record) {
    record["output"] = out.filename().string();
    write_text_atomic(out.string() + ".provenance.json", record.dump(2) + "\n");
}

// Serialized pre-training corpus for the manifest tables that pass the
// meaningless-name filter.
struct CorpusBuild {
    std::vector<std::string> sentences;
    std::vector<std::string> provenance;
    std::vector<Table> accepted;
};

CorpusBuild build_corpus(const Manifest& manifest, const CodecConfig& codec, int permutations, std::uint64_t seed,
                         bool print) {
    const auto& entries = manifest.pretrain.empty() ? manifest.datasets : manifest.pretrain;
    if (entries.empty()) {
        throw Error(ErrorKind::config, "manifest lists no tables");
    }
    CorpusBuild out;
    for (std::size_t t = 0; t < entries.size(); ++t) {
        Table table = entries[t].load();
        if (has_meaningless_names(table.schema)) {
            if (print) {
                std::cout << "rejected " << entries[t].name << ": meaningless column names\n";
            }
            continue;
        }
        CodecConfig c = codec;
        c.includeLabel = codec.includeLabel && table.schema.label.has_value();
        auto s = serialize_table(table, c, permutations, derive_seed(seed, t));
        if (print) {
            std::cout << "accepted " << entries[t].name << ": " << s.size() << " sentences\n";
        }
        for (auto& line : s) {
            out.sentences.push_back(std::move(line));
            out.provenance.push_back(entries[t].name);
        }
        out.accepted.push_back(std::move(table));
    }
    if (out.accepted.empty()) {
        throw Error(ErrorKind::data, "every manifest table was rejected");
    }
    return out;
}

std::unique_ptr<TextGenerator> open_generator(const RunConfig& cfg, const std::string& checkpoint,
                                              std::unique_ptr<GenerativeBackend>& holder) {
    if (cfg.backend.kind.rfind("plugin:", 0) == 0) {
        return std::make_unique<PluginGenerator>(cfg.backend.kind.substr(7));
    }
    if (checkpoint.empty()) {
        throw Error(ErrorKind::usage, "--checkpoint is required unless --backend plugin:<cmd> is used");
    }
    holder = load_checkpoint(checkpoint);
    return std::make_unique<BackendGenerator>(*holder, cfg.codec.clauseSeparator);
}

std::string checkpoint_hash(const std::string& path) {
    return path.empty() ? std::string() : content_hash(read_text_file(path));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tabsynth: tabular data synthesis through serialized-text language models"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Master seed for all randomness");
    app.add_option("--config", g.configPath, "Run config (JSON)");
    app.add_option("--backend", g.backend, "ngram | neural | plugin:<cmd>");
    app.add_option("--backbone", g.backbone, "cart | knn | plugin:<cmd>");
    app.add_option("--temperature", g.temperature, "Sampling temperature");
    app.add_flag("--clamp", g.clamp, "Only emit categorical values seen in the fine-tuning table");
    app.add_option("--strategy", g.strategy, "feature-name | one-pair");
    app.add_option("--toggle", g.toggles, "no-pretrain | no-label | no-char | no-names (repeatable)");

    std::string manifestPath, outPath, dataPath, label, task = "classification", checkpoint, datasetName;
    int permutations = 1;
    std::optional<int> epochs, steps, maxAttempts;
    std::size_t count = 0;
    std::vector<std::string> promptPairs;

    auto* buildCorpus = app.add_subcommand("build-corpus", "Serialize manifest tables into a sentence corpus");
    buildCorpus->add_option("--manifest", manifestPath)->required();
    buildCorpus->add_option("--out", outPath)->required();
    buildCorpus->add_option("--permutations", permutations, "Serializations per row");

    auto* pretrainCmd = app.add_subcommand("pretrain", "Pre-train a backend on the manifest corpus");
    pretrainCmd->add_option("--manifest", manifestPath)->required();
    pretrainCmd->add_option("--out", outPath, "Checkpoint path")->required();
    pretrainCmd->add_option("--epochs", epochs);

    auto* finetuneCmd = app.add_subcommand("finetune", "Fine-tune a checkpoint on a downstream table");
    finetuneCmd->add_option("--checkpoint", checkpoint)->required();
    finetuneCmd->add_option("--data", dataPath)->required();
    finetuneCmd->add_option("--label", label);
    finetuneCmd->add_option("--task", task);
    finetuneCmd->add_option("--out", outPath)->required();
    finetuneCmd->add_option("--steps", steps);

    auto* sampleCmd = app.add_subcommand("sample", "Generate synthetic rows and label them with the backbone");
    sampleCmd->add_option("--checkpoint", checkpoint);
    sampleCmd->add_option("--data", dataPath, "Fine-tuning table (schema, clamp sets, backbone)")->required();
    sampleCmd->add_option("--label", label);
    sampleCmd->add_option("--task", task);
    sampleCmd->add_option("--count", count)->required();
    sampleCmd->add_option("--out", outPath)->required();
    sampleCmd->add_option("--prompt", promptPairs, "feature=value pair (repeatable)");
    sampleCmd->add_option("--max-attempts", maxAttempts);

    auto* imputeCmd = app.add_subcommand("impute", "Fill missing cells with the language model");
    imputeCmd->add_option("--checkpoint", checkpoint);
    imputeCmd->add_option("--data", dataPath)->required();
    imputeCmd->add_option("--label", label);
    imputeCmd->add_option("--task", task);
    imputeCmd->add_option("--out", outPath)->required();
    imputeCmd->add_option("--max-attempts", maxAttempts);

    auto* balanceCmd = app.add_subcommand("balance", "Generate minority rows until the classes are at parity");
    balanceCmd->add_option("--checkpoint", checkpoint);
    balanceCmd->add_option("--data", dataPath)->required();
    balanceCmd->add_option("--label", label)->required();
    balanceCmd->add_option("--out", outPath)->required();
    balanceCmd->add_option("--max-attempts", maxAttempts);

    std::string scenarioName;
    std::vector<std::uint64_t> seeds;
    std::string mechanism;
    auto* scenarioCmd = app.add_subcommand("scenario", "Run a benchmark protocol");
    scenarioCmd->add_option("name", scenarioName, "privacy | low-resource | imputation | imbalance")->required();
    scenarioCmd->add_option("--manifest", manifestPath)->required();
    scenarioCmd->add_option("--dataset", datasetName);
    scenarioCmd->add_option("--out", outPath, "Report (JSON lines)")->required();
    scenarioCmd->add_option("--seeds", seeds, "Run seeds")->delimiter(',');
    scenarioCmd->add_option("--mechanism", mechanism, "mcar | mar (imputation)");

    auto* ablationCmd = app.add_subcommand("ablation", "Privacy protocol under each --toggle arm");
    ablationCmd->add_option("--manifest", manifestPath)->required();
    ablationCmd->add_option("--dataset", datasetName);
    ablationCmd->add_option("--out", outPath)->required();
    ablationCmd->add_option("--seeds", seeds)->delimiter(',');

    double fraction = 0.75;
    auto* splitCmd = app.add_subcommand("split", "Seeded train/test split");
    std::string trainOut, testOut;
    splitCmd->add_option("--data", dataPath)->required();
    splitCmd->add_option("--label", label);
    splitCmd->add_option("--task", task);
    splitCmd->add_option("--fraction", fraction);
    splitCmd->add_option("--train-out", trainOut)->required();
    splitCmd->add_option("--test-out", testOut)->required();

    double ratio = 0.3;
    std::string anchor;
    auto* maskCmd = app.add_subcommand("mask", "Apply MCAR/MAR missingness to feature cells");
    maskCmd->add_option("--data", dataPath)->required();
    maskCmd->add_option("--label", label);
    maskCmd->add_option("--task", task);
    maskCmd->add_option("--mechanism", mechanism);
    maskCmd->add_option("--ratio", ratio);
    maskCmd->add_option("--anchor", anchor);
    maskCmd->add_option("--out", outPath)->required();

    std::size_t imbalance = 50;
    auto* downsampleCmd = app.add_subcommand("downsample", "Subsample the minority class to a ratio");
    downsampleCmd->add_option("--data", dataPath)->required();
    downsampleCmd->add_option("--label", label)->required();
    downsampleCmd->add_option("--ratio", imbalance);
    downsampleCmd->add_option("--out", outPath)->required();

    std::string synthPath;
    bool unscaled = false;
    std::size_t coverageK = 5;
    auto* dcrCmd = app.add_subcommand("dcr", "Distance to closest record, one value per line, plus coverage");
    dcrCmd->add_option("--synth", synthPath)->required();
    dcrCmd->add_option("--data", dataPath, "Training table")->required();
    dcrCmd->add_option("--label", label);
    dcrCmd->add_option("--task", task);
    dcrCmd->add_option("--out", outPath)->required();
    dcrCmd->add_option("--k", coverageK);
    dcrCmd->add_flag("--unscaled", unscaled);

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            throw Error(ErrorKind::usage, e.what());
        }

        RunConfig cfg = resolve_config(g);
        if (!seeds.empty()) {
            cfg.seeds = seeds;
        }
        if (!mechanism.empty()) {
            cfg.mechanism = parse_mechanism(mechanism);
        }
        if (epochs) {
            cfg.backend.pretrainEpochs = *epochs;
        }
        if (steps) {
            cfg.backend.finetuneSteps = *steps;
        }
        if (maxAttempts) {
            cfg.sampling.maxAttemptsPerRow = *maxAttempts;
        }
        cfg.validate();

        nlohmann::json prov = {{"command", app.get_subcommands().front()->get_name()},
                               {"seed", g.seed},
                               {"config", cfg.to_json()}};

        if (*buildCorpus) {
            const auto manifest = Manifest::load(manifestPath);
            const auto corpus = build_corpus(manifest, cfg.codec, permutations, g.seed, true);
            std::string text;
            for (const auto& s : corpus.sentences) {
                text += s + "\n";
            }
            const Vocabulary vocab = build_vocabulary(corpus.sentences, cfg.codec.clauseSeparator);
            std::string vocabText;
            for (const auto& t : vocab.tokens()) {
                vocabText += t + "\n";
            }
            write_text_atomic(outPath + ".vocab", vocabText);
            write_text_atomic(outPath, text);
            nlohmann::json tables = nlohmann::json::array();
            for (const auto& t : corpus.accepted) {
                tables.push_back(t.sourceId);
            }
            prov["tables"] = tables;
            prov["sentences"] = corpus.sentences.size();
            write_provenance(outPath, prov);
            std::cout << corpus.sentences.size() << " sentences, " << vocab.size() << " tokens\n";
        } else if (*pretrainCmd) {
            const auto manifest = Manifest::load(manifestPath);
            const auto corpus = build_corpus(manifest, cfg.codec, cfg.backend.permutationsPerRow, g.seed, false);
            auto backend = make_backend(cfg.backend, corpus.sentences, derive_seed(g.seed, 1));
            Corpus c = make_corpus(*backend, corpus.sentences, cfg.codec.clauseSeparator, "pretrain");
            c.provenance = corpus.provenance;
            const auto trace = pretrain(*backend, c, cfg.backend.pretrainEpochs, derive_seed(g.seed, 2));
            for (std::size_t e = 0; e < trace.size(); ++e) {
                log(LogLevel::info, "epoch " + std::to_string(e + 1) + " mean NLL " + std::to_string(trace[e]));
            }
            save_checkpoint(*backend, outPath);
            prov["checkpoint_hash"] = checkpoint_hash(outPath);
            prov["loss_trace"] = trace;
            write_provenance(outPath, prov);
        } else if (*finetuneCmd) {
            auto backend = load_checkpoint(checkpoint);
            const Table table = load_table(dataPath, label, task);
            const auto sentences = serialize_table(table, cfg.codec, cfg.backend.permutationsPerRow, g.seed);
            const Corpus c = make_corpus(*backend, sentences, cfg.codec.clauseSeparator, table.sourceId);
            finetune(*backend, c, cfg.backend.finetuneSteps, derive_seed(g.seed, 1));
            save_checkpoint(*backend, outPath);
            prov["input_checkpoint_hash"] = checkpoint_hash(checkpoint);
            prov["data_hash"] = content_hash(to_csv(table));
            prov["checkpoint_hash"] = checkpoint_hash(outPath);
            write_provenance(outPath, prov);
        } else if (*sampleCmd) {
            const Table table = load_table(dataPath, label, task);
            std::unique_ptr<GenerativeBackend> holder;
            auto gen = open_generator(cfg, checkpoint, holder);
            const ClampSets clamp = ClampSets::from_table(table);
            Prompt prompt;
            for (const auto& p : promptPairs) {
                const auto eq = p.find('=');
                if (eq == std::string::npos) {
                    throw Error(ErrorKind::usage, "--prompt expects feature=value, got '" + p + "'");
                }
                prompt.pairs.push_back({p.substr(0, eq), p.substr(eq + 1)});
            }
            PromptSource prompts;
            if (!prompt.pairs.empty()) {
                prompt.strategy = prompt.pairs.size() == 1 ? Strategy::onePair : Strategy::multiPair;
                prompts = [prompt](std::size_t) { return prompt; };
            } else if (cfg.labelFirst && table.schema.label) {
                prompts = [&table, seed = g.seed](std::size_t slot) {
                    Rng rng(derive_seed(derive_seed(seed, 7), slot));
                    Prompt p;
                    p.strategy = Strategy::onePair;
                    p.pairs.push_back({table.schema.label->name, table.rows[rng.index(table.size())].label->text()});
                    return p;
                };
            } else {
                prompts = [](std::size_t) { return Prompt{}; };
            }
            auto result = sample_table(*gen, table.schema, prompts, count, cfg.sampling, cfg.codec, &clamp);
            Table out = result.table;
            if (table.schema.label) {
                auto predictor = make_predictor(cfg.backbone.kind, cfg.backbone.cart, cfg.backbone.knn);
                predictor->fit(table);
                out = label_synthetic(*predictor, result.table);
                // Prompted labels are kept; the backbone labels the rest.
                for (std::size_t i = 0; i < out.rows.size(); ++i) {
                    for (const auto& p : prompt.pairs) {
                        if (table.schema.is_label(p.feature)) {
                            out.rows[i].label = result.labels[i];
                        }
                    }
                }
            }
            write_csv(out, outPath);
            prov["data_hash"] = content_hash(to_csv(table));
            prov["checkpoint_hash"] = checkpoint_hash(checkpoint);
            prov["sampling"] = result.report.to_json();
            write_provenance(outPath, prov);
            log(LogLevel::info, "acceptance rate " + std::to_string(result.report.acceptance_rate()));
        } else if (*imputeCmd) {
            const Table table = load_table(dataPath, label, task);
            std::unique_ptr<GenerativeBackend> holder;
            auto gen = open_generator(cfg, checkpoint, holder);
            const ClampSets clamp = ClampSets::from_table(table);
            auto result = impute_rows(*gen, table, cfg.sampling, cfg.codec, fallback_fill(table), &clamp);
            write_csv(result.table, outPath);
            prov["data_hash"] = content_hash(to_csv(table));
            prov["checkpoint_hash"] = checkpoint_hash(checkpoint);
            prov["imputation"] = result.report.to_json();
            write_provenance(outPath, prov);
        } else if (*balanceCmd) {
            const Table table = load_table(dataPath, label, "classification");
            std::unique_ptr<GenerativeBackend> holder;
            auto gen = open_generator(cfg, checkpoint, holder);
            const ClassBalance balance = class_balance(table);
            const std::size_t need = balance.majorityCount - balance.minorityCount;
            Table out = table;
            nlohmann::json report;
            if (need > 0) {
                const ClampSets clamp = ClampSets::from_table(table);
                Prompt prompt;
                prompt.strategy = Strategy::onePair;
                prompt.pairs.push_back({table.schema.label->name, balance.minority});
                auto result = sample_table(*gen, table.schema, prompt, need, cfg.sampling, cfg.codec, &clamp);
                Table synth = table.with_rows({});
                for (auto row : result.table.rows) {
                    row.label = Cell::category(balance.minority);
                    synth.rows.push_back(std::move(row));
                }
                out = concatenate(table, synth);
                report = result.report.to_json();
            }
            write_csv(out, outPath);
            prov["data_hash"] = content_hash(to_csv(table));
            prov["checkpoint_hash"] = checkpoint_hash(checkpoint);
            prov["generated"] = need;
            prov["sampling"] = report;
            write_provenance(outPath, prov);
        } else if (*scenarioCmd || *ablationCmd) {
            const auto manifest = Manifest::load(manifestPath);
            ScenarioRunner runner(load_inputs(manifest, datasetName), cfg);
            ScenarioReport report;
            if (*scenarioCmd) {
                report = runner.run(parse_scenario(scenarioName));
            } else {
                std::vector<Toggle> toggles;
                for (const auto& t : g.toggles) {
                    toggles.push_back(parse_toggle(t));
                }
                if (toggles.empty()) {
                    toggles = {Toggle::noPretrain, Toggle::noLabel, Toggle::noChar, Toggle::noNames};
                }
                report = runner.run_ablation(toggles);
            }
            write_text_atomic(outPath, report.to_jsonl());
            std::cout << report.summary_table();
        } else if (*splitCmd) {
            const Table table = load_table(dataPath, label, task);
            auto [train, test] = split(table, fraction, g.seed);
            write_csv(train, trainOut);
            write_csv(test, testOut);
        } else if (*maskCmd) {
            const Table table = load_table(dataPath, label, task);
            MissingnessSpec spec;
            spec.mechanism = cfg.mechanism;
            spec.missRatio = ratio;
            spec.seed = g.seed;
            if (!anchor.empty()) {
                spec.anchorColumn = anchor;
            }
            const Table masked = apply_missingness(table, spec);
            write_csv(masked, outPath);
            std::cout << count_missing_features(masked) << " of " << maskable_cell_count(table, spec)
                      << " maskable cells masked\n";
        } else if (*downsampleCmd) {
            const Table table = load_table(dataPath, label, "classification");
            write_csv(downsample_minority(table, imbalance, g.seed), outPath);
        } else if (*dcrCmd) {
            const Table train = load_table(dataPath, label, task);
            LoadOptions opts;
            opts.schemaHint = train.schema;
            if (!label.empty()) {
                opts.labelColumn = label;
                opts.task = parse_task(task);
            }
            const Table synth = load_csv(synthPath, opts);
            const auto dcr = dcr_distribution(synth, train, !unscaled);
            std::ostringstream text;
            text.precision(17);
            for (double d : dcr) {
                text << d << "\n";
            }
            write_text_atomic(outPath, text.str());
            if (coverageK < train.size()) {
                std::cout << "coverage(k=" << coverageK << ") = " << coverage(train, synth, coverageK, !unscaled).value
                          << "\n";
            }
        }
        return 0;
    } catch (const Error& e) {
        std::string msg = e.what();
        for (char& c : msg) {
            if (c == '\n' || c == '\r') {
                c = ' ';
            }
        }
        std::cerr << "error: " << to_string(e.kind()) << ": " << msg << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}
