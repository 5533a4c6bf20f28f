// Acceptance suite: one PASS/FAIL line per criterion. Criteria 5-11 write
// report files; criterion 12 reruns them and compares the bytes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "desk_data.hpp"
#include "json.hpp"
#include "tabsynth/backbone.hpp"
#include "tabsynth/checkpoint.hpp"
#include "tabsynth/codec.hpp"
#include "tabsynth/metrics.hpp"
#include "tabsynth/neural.hpp"
#include "tabsynth/ngram.hpp"
#include "tabsynth/random.hpp"
#include "tabsynth/sampler.hpp"
#include "tabsynth/scenarios.hpp"

using namespace tabsynth;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// ---------------------------------------------------------------- 1, 2

std::string random_number_text(Rng& rng) {
    std::string s;
    if (rng.bernoulli(0.4)) {
        s += '-';
    }
    s += std::to_string(rng.index(100000));
    if (rng.bernoulli(0.5)) {
        s += '.';
        const std::size_t digits = 1 + rng.index(4);
        for (std::size_t i = 0; i < digits; ++i) {
            s += static_cast<char>('0' + rng.index(10));
        }
    }
    return s;
}

std::string random_category(Rng& rng) {
    static const std::vector<std::string> parts = {"a", "b, c", "x,y", " lead", "trail ", "\"q\"", "is", "12",
                                                   "≤ 50K", "HS-grad", ", ", "a , b", "mid is mid", "z"};
    std::string s = parts[rng.index(parts.size())];
    if (rng.bernoulli(0.5)) {
        s += parts[rng.index(parts.size())];
    }
    return s;
}

Outcome criterion1() {
    const auto t0 = Clock::now();
    Rng rng(2024);
    std::size_t rows = 0, ok = 0;
    std::string firstFailure;
    while (rows < 10000) {
        Schema schema;
        const std::size_t m = 1 + rng.index(30);
        for (std::size_t j = 0; j < m; ++j) {
            schema.columns.push_back({"col" + std::to_string(j) + (rng.bernoulli(0.3) ? " name" : ""),
                                      rng.bernoulli(0.5) ? ColumnKind::numerical : ColumnKind::categorical});
        }
        const bool withLabel = rng.bernoulli(0.5);
        if (withLabel) {
            schema.label = LabelSpec{"target", Task::classification};
        }
        CodecConfig cfg;
        cfg.useCharacterNumbers = rng.bernoulli(0.8);
        for (int r = 0; r < 50 && rows < 10000; ++r, ++rows) {
            Row row;
            for (const auto& c : schema.columns) {
                if (c.kind == ColumnKind::numerical) {
                    const std::string text = random_number_text(rng);
                    row.cells.push_back(Cell::number(text, std::stod(text)));
                } else {
                    row.cells.push_back(Cell::category(random_category(rng)));
                }
            }
            if (withLabel) {
                row.label = Cell::category(random_category(rng));
            }
            const std::size_t slots = slot_count(schema, cfg);
            const std::string text = encode_row(row, schema, random_permutation(slots, rng.next()), cfg);
            const auto decoded = decode_row(parse_sentence(text, schema, cfg), schema, DecodePolicy::strict, withLabel);
            if (decoded && *decoded.row == row) {
                ++ok;
            } else if (firstFailure.empty()) {
                firstFailure = text;
            }
        }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = ok == rows && secs < 5.0;
    o.detail = std::to_string(ok) + "/" + std::to_string(rows) + " exact round-trips in " + fmt(secs, 3) + " s";
    if (!firstFailure.empty()) {
        o.detail += "; first failure: " + firstFailure;
    }
    return o;
}

Outcome criterion2() {
    const Table t = parse_csv("Age\n18\n", "t");
    const std::string text = encode_row(t.rows[0], t.schema, Permutation::identity(1), CodecConfig{});
    const auto parsed = parse_sentence(text, t.schema, CodecConfig{});
    const bool back = parsed.ok() && parsed.clauses.size() == 1 && parsed.clauses[0].value == "18";
    return {text == "Age is 1 8" && back, "rendered \"" + text + "\", parsed back " + (back ? "18" : "wrong")};
}

// ---------------------------------------------------------------- 3, 4

std::vector<std::string> desk_sentences(const Table& t, std::uint64_t seed) {
    return serialize_table(t, CodecConfig{}, 1, seed);
}

bool normalized_everywhere(const GenerativeBackend& b, Rng& rng, double& worst) {
    bool ok = true;
    for (int i = 0; i < 1000; ++i) {
        std::vector<TokenId> ctx{special::bosId};
        const std::size_t len = rng.index(40);
        for (std::size_t j = 0; j < len; ++j) {
            ctx.push_back(static_cast<TokenId>(rng.index(b.vocabulary().size())));
        }
        const auto p = b.next_distribution(ctx);
        double sum = 0.0;
        for (double x : p) {
            ok = ok && x >= 0.0;
            sum += x;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return ok && worst <= 1e-6;
}

Outcome criterion3() {
    const Table t = desk::desk_table(100, 31);
    const auto sentences = desk_sentences(t, 1);
    NgramModel ngram(Vocabulary{}, NgramConfig{});
    ngram.pretrain(make_corpus(ngram, sentences, ", ", "desk"), 1, 0);

    NeuralConfig nc;
    nc.dim = 16;
    nc.context = 48;
    nc.layers = 1;
    TinyNeuralLM neural(build_vocabulary(sentences, ", "), nc, 5);
    std::vector<std::string> few(sentences.begin(), sentences.begin() + 20);
    neural.pretrain(make_corpus(neural, few, ", ", "desk"), 2, 1);

    Rng rng(99);
    double wn = 0.0, wv = 0.0;
    const bool a = normalized_everywhere(ngram, rng, wn);
    const bool b = normalized_everywhere(neural, rng, wv);
    return {a && b, "max |sum-1|: ngram " + fmt(wn, 3) + ", neural " + fmt(wv, 3)};
}

Outcome criterion4() {
    Rng rng(4);
    const std::vector<std::string> words = {"Age", "is", "1", "8", "red", "x"};
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> sentences;
        const std::size_t n = 1 + rng.index(20);
        for (std::size_t s = 0; s < n; ++s) {
            std::string text;
            const std::size_t len = 1 + rng.index(8);
            for (std::size_t i = 0; i < len; ++i) {
                text += (i ? " " : "") + words[rng.index(words.size())];
            }
            sentences.push_back(text);
        }
        NgramConfig cfg;
        cfg.order = 1 + static_cast<int>(rng.index(5));
        cfg.addK = 1e-3 + rng.uniform();
        NgramModel model(Vocabulary{}, cfg);
        model.pretrain(make_corpus(model, sentences, ", ", "t"), 1, 0);
        const Vocabulary& v = model.vocabulary();

        // Oracle: string n-gram counts and the longest-observed-suffix rule.
        std::map<std::vector<std::string>, std::map<std::string, double>> counts;
        for (const auto& s : sentences) {
            std::vector<std::string> toks{"<bos>"};
            for (auto& tok : tokenize(s, ", ")) {
                toks.push_back(tok);
            }
            toks.push_back("<eos>");
            for (std::size_t i = 1; i < toks.size(); ++i) {
                for (std::size_t len = 0; len < static_cast<std::size_t>(cfg.order) && len <= i; ++len) {
                    counts[std::vector<std::string>(toks.begin() + (i - len), toks.begin() + i)][toks[i]] += 1;
                }
            }
        }
        for (int q = 0; q < 40; ++q) {
            std::vector<std::string> ctx{"<bos>"};
            const std::size_t len = rng.index(6);
            for (std::size_t i = 0; i < len; ++i) {
                ctx.push_back(words[rng.index(words.size())]);
            }
            std::vector<TokenId> ids;
            for (const auto& s : ctx) {
                ids.push_back(v.id(s));
            }
            const auto dist = model.next_distribution(ids);
            const std::map<std::string, double>* hit = nullptr;
            for (std::size_t l = std::min<std::size_t>(ctx.size(), cfg.order - 1) + 1; l-- > 0 && !hit;) {
                auto it = counts.find(std::vector<std::string>(ctx.end() - l, ctx.end()));
                if (it != counts.end()) {
                    hit = &it->second;
                }
            }
            double total = 0.0;
            for (const auto& kv : *hit) {
                total += kv.second;
            }
            for (std::size_t w = 0; w < v.size(); ++w) {
                auto it = hit->find(v.token(w));
                const double c = it == hit->end() ? 0.0 : it->second;
                const double expected = (c + cfg.addK) / (total + cfg.addK * static_cast<double>(v.size()));
                worst = std::max(worst, std::abs(dist[w] - expected));
            }
        }
    }
    return {worst <= 1e-12, "max |model - oracle| = " + fmt(worst, 3) + " over 50 corpora"};
}

// ---------------------------------------------------------------- 5-11

Outcome criterion5(const fs::path& dir) {
    NeuralConfig small;
    small.dim = 12;
    small.context = 16;
    small.layers = 2;
    small.hidden = 24;
    small.initScale = 0.3;
    TinyNeuralLM probe(Vocabulary({"a", "b", "c", "d"}), small, 3);
    const std::vector<TokenSequence> batch = {{0, 5, 3, 6, 2, 7, 3, 8, 1}, {0, 8, 8, 3, 5, 1}};
    const double gradErr = neural_gradient_check(probe, batch, 1e-4);

    const Table table = desk::desk_table(10, 55);
    const auto sentences = desk_sentences(table, 2);
    NeuralConfig cfg;
    cfg.dim = 48;
    cfg.context = 48;
    cfg.layers = 2;
    cfg.learningRate = 1e-2;
    cfg.batchSize = 10;
    TinyNeuralLM lm(build_vocabulary(sentences, ", "), cfg, 17);
    const Corpus corpus = make_corpus(lm, sentences, ", ", "memo");
    const auto trace = lm.pretrain(corpus, 200, 8);
    const double finalNll = lm.loss(corpus.sequences);

    BackendGenerator gen(lm, ", ");
    SamplingConfig sc;
    sc.maxTokens = cfg.context;
    std::size_t valid = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto text = gen.complete("", sc, derive_seed(123, s));
        if (decode_row(parse_sentence(text, table.schema, CodecConfig{}), table.schema, DecodePolicy::strict)) {
            ++valid;
        }
    }
    nlohmann::json report = {{"gradient_max_rel_error", gradErr},
                             {"parameters", probe.parameter_count()},
                             {"loss_trace", trace},
                             {"final_nll", finalNll},
                             {"strict_valid_samples", valid}};
    write_file(dir / "c5_neural.json", report.dump(1) + "\n");
    Outcome o;
    o.pass = probe.parameter_count() <= 10000 && gradErr < 1e-3 && finalNll < 0.1 && valid >= 190;
    o.detail = "grad rel err " + fmt(gradErr, 3) + " (" + std::to_string(probe.parameter_count()) +
               " params), NLL after 200 epochs " + fmt(finalNll, 4) + ", strict-valid " + std::to_string(valid) +
               "/200";
    return o;
}

std::unique_ptr<NgramModel> tuned_ngram(const Table& downstream, std::uint64_t seed) {
    auto m = std::make_unique<NgramModel>(Vocabulary{}, NgramConfig{});
    for (std::size_t i = 0; i < 5; ++i) {
        const Table sib = desk::sibling_table(i, 300);
        m->pretrain(make_corpus(*m, serialize_table(sib, CodecConfig{}, 1, seed + i), ", ", sib.sourceId), 1, 0);
    }
    m->finetune(make_corpus(*m, serialize_table(downstream, CodecConfig{}, 1, seed), ", ", "down"), 1, 0);
    return m;
}

Outcome criterion6(const fs::path& dir) {
    const Table train = desk::desk_table(400, 61);
    const ClassBalance bal = class_balance(train);
    auto model = tuned_ngram(train, 6);
    BackendGenerator gen(*model, ", ");

    SamplingConfig sc;
    sc.seed = 6;
    Prompt p{Strategy::onePair, {{"approved", bal.minority}}, std::nullopt};
    const auto conditioned = sample_table(gen, train.schema, p, 300, sc, CodecConfig{}, nullptr);
    std::size_t minority = 0;
    for (const auto& l : conditioned.labels) {
        minority += l && l->text() == bal.minority;
    }

    // Independent value sets straight from the table text.
    std::map<std::size_t, std::set<std::string>> seen;
    for (const auto& row : train.rows) {
        for (std::size_t j = 0; j < train.schema.size(); ++j) {
            if (train.schema.columns[j].kind == ColumnKind::categorical) {
                seen[j].insert(row.cells[j].text());
            }
        }
    }
    sc.categoricalClamp = true;
    sc.temperature = 1.5;
    const ClampSets clamp = ClampSets::from_table(train);
    const auto clamped = sample_table(gen, train.schema, Prompt{}, 300, sc, CodecConfig{}, &clamp);
    std::size_t cells = 0, inside = 0;
    for (const auto& row : clamped.table.rows) {
        for (auto& [j, values] : seen) {
            ++cells;
            inside += values.count(row.cells[j].text());
        }
    }
    nlohmann::json report = {{"conditioned", conditioned.report.to_json()},
                             {"minority_label_rows", minority},
                             {"clamped", clamped.report.to_json()},
                             {"clamped_cells", cells},
                             {"clamped_cells_in_sets", inside},
                             {"rows", to_csv(clamped.table)}};
    write_file(dir / "c6_conditional.json", report.dump(1) + "\n");
    Outcome o;
    o.pass = conditioned.table.size() == 300 && minority == 300 && clamped.table.size() == 300 && inside == cells;
    o.detail = std::to_string(minority) + "/300 rows carry the minority label; " + std::to_string(inside) + "/" +
               std::to_string(cells) + " clamped categorical cells in fine-tuning sets (" +
               std::to_string(clamped.report.rejections.count("clamp-violation")
                                  ? clamped.report.rejections.at("clamp-violation")
                                  : 0) +
               " clamp rejections)";
    return o;
}

Outcome criterion7(const fs::path& dir) {
    const Table table = desk::desk_table(1000, 71);
    nlohmann::json report = nlohmann::json::array();
    bool pass = true;
    std::string detail;
    for (Mechanism mech : {Mechanism::mcar, Mechanism::mar}) {
        MissingnessSpec spec;
        spec.mechanism = mech;
        spec.missRatio = 0.3;
        spec.seed = 7;
        if (mech == Mechanism::mar) {
            spec.anchorColumn = "age";
        }
        const Table masked = apply_missingness(table, spec);
        std::size_t maskable = 0, maskedCells = 0;
        for (std::size_t i = 0; i < table.size(); ++i) {
            for (std::size_t j = 0; j < table.schema.size(); ++j) {
                if (mech == Mechanism::mar && j == 0) {
                    continue;
                }
                ++maskable;
                maskedCells += masked.rows[i].cells[j].is_missing();
            }
        }
        const double fraction = static_cast<double>(maskedCells) / static_cast<double>(maskable);

        auto model = std::make_unique<NgramModel>(Vocabulary{}, NgramConfig{});
        model->pretrain(make_corpus(*model, serialize_table(masked, CodecConfig{}, 1, 7), ", ", "masked"), 1, 0);
        BackendGenerator gen(*model, ", ");
        SamplingConfig sc;
        sc.seed = 7;
        const auto imputed = impute_rows(gen, masked, sc, CodecConfig{}, fallback_fill(masked), nullptr);

        std::size_t altered = 0, missing = 0;
        for (std::size_t i = 0; i < table.size(); ++i) {
            for (std::size_t j = 0; j < table.schema.size(); ++j) {
                const Cell& before = masked.rows[i].cells[j];
                const Cell& after = imputed.table.rows[i].cells[j];
                altered += !before.is_missing() && !(before == after);
                missing += after.is_missing();
            }
            altered += !(masked.rows[i].label == imputed.table.rows[i].label);
        }
        const bool ok = altered == 0 && missing == 0 && fraction >= 0.27 && fraction <= 0.33;
        pass = pass && ok;
        report.push_back(nlohmann::json{{"mechanism", std::string(to_string(mech))},
                          {"masked_fraction", fraction},
                          {"altered_observed_cells", altered},
                          {"remaining_missing", missing},
                          {"imputation", imputed.report.to_json()},
                          {"completed_hash", content_hash(to_csv(imputed.table))}});
        detail += std::string(detail.empty() ? "" : "; ") + std::string(to_string(mech)) + ": masked " +
                  fmt(fraction, 4) + ", altered " + std::to_string(altered) + ", missing after " +
                  std::to_string(missing);
    }
    write_file(dir / "c7_imputation.json", report.dump(1) + "\n");
    return {pass, detail};
}

Outcome criterion8(const fs::path& dir) {
    // Balancing on the desk table.
    const Table table = desk::desk_table(2000, 81);
    const Table imbalanced = downsample_minority(table, 50, 8);
    const ClassBalance before = class_balance(imbalanced);
    auto model = tuned_ngram(imbalanced, 8);
    BackendGenerator gen(*model, ", ");
    SamplingConfig sc;
    sc.seed = 8;
    Prompt p{Strategy::onePair, {{"approved", before.minority}}, std::nullopt};
    const std::size_t need = before.majorityCount - before.minorityCount;
    const auto generated = sample_table(gen, imbalanced.schema, p, need, sc, CodecConfig{}, nullptr);
    Table synth = imbalanced.with_rows({});
    for (std::size_t i = 0; i < generated.table.size(); ++i) {
        Row r = generated.table.rows[i];
        r.label = generated.labels[i];
        synth.rows.push_back(r);
    }
    const Table balanced = concatenate(imbalanced, synth);
    std::map<std::string, std::size_t> counts;
    for (const auto& r : balanced.rows) {
        counts[r.label->text()]++;
    }
    const bool parity = counts.size() == 2 && counts.begin()->second == std::next(counts.begin())->second;

    // AUC against pair enumeration.
    Rng rng(88);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.index(199);
        std::vector<double> scores(n);
        std::vector<int> truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = std::round(rng.uniform() * 20.0) / 20.0;
            truth[i] = static_cast<int>(i % 2 == 0 ? 1 : rng.bernoulli(0.4));
        }
        if (std::find(truth.begin(), truth.end(), 0) == truth.end()) {
            truth[1] = 0;
        }
        double u = 0.0, pos = 0.0, neg = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pos += truth[i];
            neg += 1 - truth[i];
            for (std::size_t j = 0; j < n; ++j) {
                if (truth[i] == 1 && truth[j] == 0) {
                    u += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
                }
            }
        }
        mismatches += auc(scores, truth).value != u / (pos * neg);
    }
    nlohmann::json report = {{"majority_rows", before.majorityCount},
                             {"minority_rows_before", before.minorityCount},
                             {"generated", generated.table.size()},
                             {"class_counts", counts},
                             {"sampling", generated.report.to_json()},
                             {"auc_mismatches", mismatches}};
    write_file(dir / "c8_imbalance.json", report.dump(1) + "\n");
    std::string countText;
    for (const auto& [k, v] : counts) {
        countText += k + "=" + std::to_string(v) + " ";
    }
    return {parity && mismatches == 0,
            "after balancing " + countText + "(minority before " + std::to_string(before.minorityCount) +
                "); AUC mismatches vs pair enumeration " + std::to_string(mismatches) + "/200"};
}

Table random_table(Rng& rng, const Schema& schema, std::size_t rows) {
    Table t;
    t.schema = schema;
    for (std::size_t i = 0; i < rows; ++i) {
        Row r;
        for (const auto& c : schema.columns) {
            if (rng.bernoulli(0.05)) {
                r.cells.push_back(Cell::missing());
            } else if (c.kind == ColumnKind::numerical) {
                const std::string text = std::to_string(static_cast<long>(rng.index(50))) + "." +
                                         std::to_string(rng.index(10));
                r.cells.push_back(Cell::number(text, std::stod(text)));
            } else {
                r.cells.push_back(Cell::category(std::string(1, static_cast<char>('a' + rng.index(4)))));
            }
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

// Brute-force mixed distance scaled by the reference's numerical ranges.
struct OracleDistance {
    std::vector<double> range;
    const Schema* schema = nullptr;

    OracleDistance(const Table& ref) : range(ref.schema.size(), 1.0), schema(&ref.schema) {
        for (std::size_t j = 0; j < ref.schema.size(); ++j) {
            if (ref.schema.columns[j].kind != ColumnKind::numerical) {
                continue;
            }
            std::vector<double> vals;
            for (const auto& r : ref.rows) {
                if (!r.cells[j].is_missing()) {
                    vals.push_back(r.cells[j].value());
                }
            }
            if (!vals.empty()) {
                const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
                if (*hi > *lo) {
                    range[j] = *hi - *lo;
                }
            }
        }
    }

    double operator()(const Row& a, const Row& b) const {
        double d = 0.0;
        for (std::size_t j = 0; j < range.size(); ++j) {
            const bool ma = a.cells[j].is_missing(), mb = b.cells[j].is_missing();
            if (ma || mb) {
                d += ma && mb ? 0.0 : 1.0;
            } else if (schema->columns[j].kind == ColumnKind::numerical) {
                d += std::abs(a.cells[j].value() - b.cells[j].value()) / range[j];
            } else {
                d += a.cells[j].text() == b.cells[j].text() ? 0.0 : 1.0;
            }
        }
        return d;
    }
};

Outcome criterion9(const fs::path& dir) {
    Rng rng(9);
    std::size_t dcrMismatch = 0, coverageMismatch = 0;
    nlohmann::json values = nlohmann::json::array();
    for (int pair = 0; pair < 100; ++pair) {
        Schema schema;
        const std::size_t m = 1 + rng.index(6);
        for (std::size_t j = 0; j < m; ++j) {
            schema.columns.push_back(
                {"c" + std::to_string(j), rng.bernoulli(0.5) ? ColumnKind::numerical : ColumnKind::categorical});
        }
        const Table real = random_table(rng, schema, 7 + rng.index(94));
        const Table synth = random_table(rng, schema, 1 + rng.index(100));
        const std::size_t k = 1 + rng.index(5);

        const OracleDistance d(real);
        const auto dcr = dcr_distribution(synth, real);
        for (std::size_t s = 0; s < synth.size(); ++s) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& r : real.rows) {
                best = std::min(best, d(synth.rows[s], r));
            }
            dcrMismatch += dcr[s] != best;
        }
        std::size_t covered = 0;
        for (std::size_t i = 0; i < real.size(); ++i) {
            std::vector<double> others;
            for (std::size_t j = 0; j < real.size(); ++j) {
                if (j != i) {
                    others.push_back(d(real.rows[i], real.rows[j]));
                }
            }
            std::sort(others.begin(), others.end());
            const double radius = others[k - 1];
            for (const auto& s : synth.rows) {
                if (d(real.rows[i], s) <= radius) {
                    ++covered;
                    break;
                }
            }
        }
        const double expected = static_cast<double>(covered) / static_cast<double>(real.size());
        const double got = coverage(real, synth, k).value;
        coverageMismatch += got != expected;
        values.push_back({{"coverage", got}, {"dcr_sum", std::accumulate(dcr.begin(), dcr.end(), 0.0)}});
    }
    const Table desk = desk::desk_table(50, 90);
    const Table copied = desk.with_rows({desk.rows[10], desk.rows[33]});
    const auto copyDcr = dcr_distribution(copied, desk);
    const bool copyZero = copyDcr[0] == 0.0 && copyDcr[1] == 0.0;
    const bool r2ok = r2({0, 0, 0}, {0, 1, 2}).value == -1.5;
    write_file(dir / "c9_metrics.json", values.dump(1) + "\n");
    return {dcrMismatch == 0 && coverageMismatch == 0 && copyZero && r2ok,
            "DCR mismatches " + std::to_string(dcrMismatch) + ", coverage mismatches " +
                std::to_string(coverageMismatch) + " over 100 pairs; copied-row DCR " +
                (copyZero ? "0" : "nonzero") + "; r2 hand case " + (r2ok ? "-1.5" : "wrong")};
}

ScenarioInputs desk_inputs() {
    ScenarioInputs in;
    in.dataset = "desk";
    auto [train, test] = split(desk::desk_table(2000, 100), 0.75, 100);
    in.train = std::move(train);
    in.test = std::move(test);
    for (std::size_t i = 0; i < 5; ++i) {
        in.pretrainTables.push_back(desk::sibling_table(i, 1000));
    }
    return in;
}

RunConfig desk_config() {
    RunConfig cfg;
    cfg.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    return cfg;
}

Outcome criterion10(const fs::path& dir) {
    const auto t0 = Clock::now();
    ScenarioRunner runner(desk_inputs(), desk_config());
    const auto report = runner.run_privacy();
    const double secs = seconds_since(t0);
    write_file(dir / "c10_privacy.jsonl", report.to_jsonl());
    std::vector<double> gaps;
    for (const auto& r : report.records) {
        gaps.push_back(r.gap());
    }
    const double meanGap = mean_of(gaps);
    return {report.records.size() == 10 && meanGap * 100.0 <= 5.0 && secs < 300.0,
            "mean accuracy gap " + fmt(meanGap * 100.0, 3) + " points (sd " + fmt(sample_std(gaps) * 100.0, 3) +
                ") over " + std::to_string(gaps.size()) + " seeds in " + fmt(secs, 3) + " s"};
}

Outcome criterion11(const fs::path& dir) {
    ScenarioRunner runner(desk_inputs(), desk_config());
    const auto report = runner.run_ablation({Toggle::noPretrain, Toggle::noLabel});
    write_file(dir / "c11_ablation.jsonl", report.to_jsonl());
    std::map<std::string, std::map<std::uint64_t, double>> by;
    for (const auto& r : report.records) {
        by[r.arm][r.seed] = r.synthetic;
    }
    const auto& full = by["full"];
    double worstLabelExcess = -1.0;
    for (const auto& [seed, v] : by["no-label"]) {
        worstLabelExcess = std::max(worstLabelExcess, v - full.at(seed));
    }
    auto mean = [](const std::map<std::uint64_t, double>& m) {
        double s = 0.0;
        for (const auto& kv : m) {
            s += kv.second;
        }
        return s / static_cast<double>(m.size());
    };
    const double fullMean = mean(full), noPre = mean(by["no-pretrain"]), noLabel = mean(by["no-label"]);
    return {worstLabelExcess * 100.0 <= 1.0 && fullMean > noPre,
            "mean accuracy full " + fmt(fullMean * 100.0, 4) + ", no-pretrain " + fmt(noPre * 100.0, 4) +
                ", no-label " + fmt(noLabel * 100.0, 4) + "; largest per-seed no-label excess " +
                fmt(worstLabelExcess * 100.0, 3) + " points"};
}

using Criterion = std::function<Outcome(const fs::path&)>;

std::vector<std::pair<int, Criterion>> report_criteria() {
    return {{5, criterion5}, {6, criterion6}, {7, criterion7},  {8, criterion8},
            {9, criterion9}, {10, criterion10}, {11, criterion11}};
}

void print(int n, const std::string& title, const Outcome& o, bool& allPass) {
    allPass = allPass && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << title << "): " << o.detail << std::endl;
}

}  // namespace

int main() {
    static const std::map<int, std::string> titles = {
        {1, "codec round-trip"},         {2, "character number encoding"}, {3, "backend normalization"},
        {4, "n-gram oracle"},            {5, "neural training"},           {6, "conditional sampling"},
        {7, "imputation audit"},         {8, "imbalance protocol"},        {9, "metric oracles"},
        {10, "desk privacy gap"},        {11, "ablation direction"},       {12, "determinism"}};
    bool allPass = true;
    try {
        print(1, titles.at(1), criterion1(), allPass);
        print(2, titles.at(2), criterion2(), allPass);
        print(3, titles.at(3), criterion3(), allPass);
        print(4, titles.at(4), criterion4(), allPass);

        const fs::path root = desk::scratch_dir();
        const fs::path first = root / "run1", second = root / "run2";
        for (const auto& d : {first, second}) {
            fs::remove_all(d);
            fs::create_directories(d);
        }
        for (const auto& [n, fn] : report_criteria()) {
            print(n, titles.at(n), fn(first), allPass);
        }
        for (const auto& [n, fn] : report_criteria()) {
            fn(second);
        }
        std::size_t files = 0, identical = 0;
        std::string differing;
        for (const auto& entry : fs::directory_iterator(first)) {
            ++files;
            const auto other = second / entry.path().filename();
            if (fs::exists(other) && read_file(entry.path()) == read_file(other)) {
                ++identical;
            } else {
                differing += " " + entry.path().filename().string();
            }
        }
        print(12, titles.at(12),
              {files == 7 && identical == files,
               std::to_string(identical) + "/" + std::to_string(files) + " report files byte-identical" +
                   (differing.empty() ? "" : "; differing:" + differing)},
              allPass);
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
        return 1;
    }
    return allPass ? 0 : 1;
}
