#include <cmath>

#include "desk_data.hpp"
#include "doctest.h"
#include "tabsynth/error.hpp"
#include "tabsynth/labeling.hpp"
#include "tabsynth/ngram.hpp"
#include "tabsynth/sampler.hpp"

using namespace tabsynth;

namespace {

// Replies with a fixed list of sentences in turn, prompt ignored.
class Script final : public TextGenerator {
public:
    explicit Script(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(const std::string&, const SamplingConfig&, std::uint64_t, const ClauseGrammar*) override {
        return replies_[next_++ % replies_.size()];
    }
    std::size_t calls() const { return next_; }

private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

std::unique_ptr<NgramModel> memorized(const std::vector<std::string>& sentences, int order = 8) {
    NgramConfig cfg;
    cfg.order = order;
    cfg.addK = 1e-12;
    auto m = std::make_unique<NgramModel>(Vocabulary{}, cfg);
    m->pretrain(make_corpus(*m, sentences, ", ", "t"), 1, 0);
    return m;
}

Table labeled(const std::string& csv, const std::string& label) {
    LoadOptions opts;
    opts.labelColumn = label;
    return parse_csv(csv, "t", opts);
}

}  // namespace

TEST_CASE("prompt rendering") {
    const Table t = labeled("Age,Income\n18,≤ 50K\n30,> 50K\n", "Income");
    const CodecConfig cfg;
    Prompt one{Strategy::onePair, {{"Income", "≤ 50K"}}, std::nullopt};
    CHECK(render_prompt(one, t.schema, cfg, 0) == "Income is ≤ 50K, ");
    Prompt start{Strategy::featureName, {}, "Age"};
    CHECK(render_prompt(start, t.schema, cfg, 0) == "Age is ");
    Prompt multi{Strategy::multiPair, {{"Income", "≤ 50K"}}, std::nullopt};
    CHECK(render_prompt(multi, t.schema, cfg, 3) == render_prompt(one, t.schema, cfg, 3));
    Prompt numeric{Strategy::onePair, {{"Age", "18"}}, std::nullopt};
    CHECK(render_prompt(numeric, t.schema, cfg, 0) == "Age is 1 8, ");
    Prompt bad{Strategy::onePair, {{"Nope", "1"}}, std::nullopt};
    CHECK_THROWS_AS(bad.validate(t.schema), Error);
}

TEST_CASE("memorized backend reproduces its training row") {
    const Table t = parse_csv("A,B\n1,b\n", "t");
    auto m = memorized({"A is 1, B is b"});
    BackendGenerator gen(*m, ", ");
    const auto out = sample_row(gen, t.schema, Prompt{Strategy::featureName, {}, "A"}, SamplingConfig{},
                                CodecConfig{}, nullptr, 5);
    REQUIRE(out.row);
    CHECK(*out.row == t.rows[0]);
    CHECK(out.attempts == 1);

    auto res = sample_table(gen, t.schema, Prompt{Strategy::featureName, {}, "A"}, 1, SamplingConfig{},
                            CodecConfig{}, nullptr);
    REQUIRE(res.table.size() == 1);
    CHECK(res.table.rows[0] == t.rows[0]);
}

TEST_CASE("one-pair label prompt is copied into every row") {
    const Table t = labeled("x,y\n1,p\n2,q\n", "y");
    Script gen({"y is q, x is 1", "y is p, x is 2", "x is 3, y is q"});
    Prompt p{Strategy::onePair, {{"y", "q"}}, std::nullopt};
    auto res = sample_table(gen, t.schema, p, 6, SamplingConfig{}, CodecConfig{}, nullptr);
    REQUIRE(res.table.size() == 6);
    for (const auto& l : res.labels) {
        REQUIRE(l);
        CHECK(l->text() == "q");
    }
}

TEST_CASE("rejections are tallied and acceptance rate is accepted over attempted") {
    const Table t = parse_csv("x,c\n1,a\n2,b\n", "t");
    Script gen({"x is 1", "x is 2, c is a", "garbage", "x is 1, c is zz"});
    SamplingConfig cfg;
    cfg.categoricalClamp = true;
    const ClampSets clamp = ClampSets::from_table(t);
    auto res = sample_table(gen, t.schema, Prompt{}, 3, cfg, CodecConfig{}, &clamp);
    CHECK(res.table.size() == 3);
    const auto& r = res.report;
    CHECK(r.accepted == 3);
    CHECK(r.attempted == gen.calls());
    CHECK(r.acceptance_rate() == doctest::Approx(3.0 / static_cast<double>(gen.calls())));
    CHECK(r.acceptance_rate() > 0.0);
    CHECK(r.acceptance_rate() <= 1.0);
    CHECK(r.rejections.count("clamp-violation") == 1);
    std::size_t rejected = 0;
    for (const auto& [k, n] : r.rejections) {
        rejected += n;
    }
    CHECK(rejected + r.accepted == r.attempted);
    for (const auto& row : res.table.rows) {
        CHECK(row.cells[1].text() == "a");
    }
}

TEST_CASE("budget exhaustion raises a sampling failure with the partial result") {
    const Table t = parse_csv("x\n1\n", "t");
    Script gen({"nonsense"});
    SamplingConfig cfg;
    cfg.maxAttemptsPerRow = 3;
    try {
        sample_table(gen, t.schema, Prompt{}, 2, cfg, CodecConfig{}, nullptr);
        FAIL("expected failure");
    } catch (const SamplingFailure& f) {
        CHECK(f.kind() == ErrorKind::sampling);
        CHECK(f.partial().report.attempted == 6);
        CHECK(f.partial().table.empty());
    }
}

TEST_CASE("two equally likely rows are sampled half and half") {
    // The model gives p(a) = p(b) = 0.5 up to 1e-12 smoothing, so with
    // 10,000 draws the a-fraction has sd 0.005 and 0.02 is four sd.
    const Table t = parse_csv("X\na\nb\n", "t");
    auto m = memorized({"X is a", "X is b"}, 4);
    BackendGenerator gen(*m, ", ");
    SamplingConfig cfg;
    cfg.seed = 77;
    auto res = sample_table(gen, t.schema, Prompt{Strategy::featureName, {}, "X"}, 10000, cfg, CodecConfig{},
                            nullptr);
    std::size_t a = 0;
    for (const auto& row : res.table.rows) {
        a += row.cells[0].text() == "a";
    }
    CHECK(std::abs(a / 10000.0 - 0.5) <= 0.02);
}

TEST_CASE("sampling is deterministic per seed") {
    const Table t = desk::desk_table(50, 1);
    NgramModel m(Vocabulary{}, NgramConfig{});
    std::vector<std::string> s;
    for (const auto& row : t.rows) {
        s.push_back(encode_row(row, t.schema, Permutation::identity(6), CodecConfig{}));
    }
    m.pretrain(make_corpus(m, s, ", ", "t"), 1, 0);
    BackendGenerator gen(m, ", ");
    SamplingConfig cfg;
    cfg.seed = 3;
    const auto a = sample_table(gen, t.schema, Prompt{}, 20, cfg, CodecConfig{}, nullptr);
    const auto b = sample_table(gen, t.schema, Prompt{}, 20, cfg, CodecConfig{}, nullptr);
    CHECK(to_csv(a.table) == to_csv(b.table));
    CHECK(a.report.to_json() == b.report.to_json());
}

TEST_CASE("sample index honours temperature") {
    const std::vector<double> p = {0.25, 0.75};
    CHECK(sample_index(p, 1.0, 0.2) == 0);
    CHECK(sample_index(p, 1.0, 0.3) == 1);
    // T = 0.5 squares the weights: 1/16 vs 9/16, so the cut moves to 0.1.
    CHECK(sample_index(p, 0.5, 0.09) == 0);
    CHECK(sample_index(p, 0.5, 0.11) == 1);
}

TEST_CASE("imputation leaves complete rows alone and fills from memory") {
    const Table t = parse_csv("A,B\na,b\na,\n", "t");
    auto m = memorized({"A is a, B is b"});
    BackendGenerator gen(*m, ", ");
    auto res = impute_rows(gen, t, SamplingConfig{}, CodecConfig{}, fallback_fill(t), nullptr);
    CHECK(res.table.rows[0] == t.rows[0]);
    CHECK(res.table.rows[1].cells[0].text() == "a");
    CHECK(res.table.rows[1].cells[1].text() == "b");
    CHECK(res.report.filledByModel == 1);
    CHECK(res.report.filledByFallback == 0);
    CHECK(count_missing_features(res.table) == 0);
}

TEST_CASE("imputation falls back when the model never delivers") {
    const Table t = parse_csv("A,B\n1,x\n3,y\n5,y\n,\n", "t");
    Script gen({"junk"});
    SamplingConfig cfg;
    cfg.maxAttemptsPerRow = 2;
    auto res = impute_rows(gen, t, cfg, CodecConfig{}, fallback_fill(t), nullptr);
    CHECK(res.table.rows[3].cells[0].text() == "3");
    CHECK(res.table.rows[3].cells[1].text() == "y");
    CHECK(res.report.filledByFallback == 2);
    CHECK(res.report.rowsWithoutObserved == 1);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(res.table.rows[i] == t.rows[i]);
    }
}

TEST_CASE("fallback fill uses the lower median and the smallest mode") {
    const Table t = parse_csv("n,c\n4,b\n1,a\n3,b\n2,a\n", "t");
    const auto fill = fallback_fill(t);
    CHECK(fill[0].text() == "2");
    CHECK(fill[1].text() == "a");
}

TEST_CASE("lm labels come from the completion") {
    const Table t = labeled("A,y\na,yes\nb,no\n", "y");
    auto m = memorized({"A is a, y is yes", "A is b, y is no"});
    BackendGenerator gen(*m, ", ");
    const ClampSets clamp = ClampSets::from_table(t);
    SamplingConfig cfg;
    cfg.categoricalClamp = true;
    const Table feats = parse_csv("A\nb\na\n", "s");
    auto res = lm_label_ablation(gen, t.schema, feats, cfg, CodecConfig{}, &clamp, majority_label(t));
    REQUIRE(res.table.size() == 2);
    CHECK(res.table.rows[0].label->text() == "no");
    CHECK(res.table.rows[1].label->text() == "yes");
    CHECK(res.fallbackRows.empty());
}

TEST_CASE("constrained decoding never repeats or drops a clause") {
    // A tiny bigram model happily repeats "A is 1"; the grammar forbids it.
    const Table t = parse_csv("A,B\n1,x\n2,y\n", "t");
    NgramConfig nc;
    nc.order = 2;
    NgramModel m(Vocabulary{}, nc);
    m.pretrain(make_corpus(m, {"A is 1, A is 1, A is 1", "B is x, B is y", "A is 2"}, ", ", "t"), 1, 0);
    BackendGenerator gen(m, ", ");
    const ClauseGrammar g = ClauseGrammar::for_schema(t.schema, CodecConfig{});
    SamplingConfig cfg;
    // Value types are not part of the grammar, so only structure is checked.
    std::size_t wellFormed = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto p = parse_sentence(gen.complete("", cfg, s, &g), t.schema, CodecConfig{});
        bool ok = true;
        for (const auto& d : p.diagnostics) {
            ok = ok && (d.kind == DiagnosticKind::typeMismatch);
        }
        wellFormed += ok && p.clauses.size() + p.diagnostics.size() == 2;
    }
    CHECK(wellFormed == 200);
}

TEST_CASE("grammar requires the label only on request") {
    LoadOptions opts;
    opts.labelColumn = "y";
    const Table t = parse_csv("a,y\n1,p\n2,q\n", "t", opts);
    const auto g = ClauseGrammar::for_schema(t.schema, CodecConfig{});
    REQUIRE(g.names.size() == 2);
    CHECK(g.required == std::vector<bool>{true, false});
    CHECK(ClauseGrammar::for_schema(t.schema, CodecConfig{}, true).required == std::vector<bool>{true, true});
    CodecConfig noLabel;
    noLabel.includeLabel = false;
    CHECK(ClauseGrammar::for_schema(t.schema, noLabel).names.size() == 1);
}

TEST_CASE("quoted values may contain the separator under the grammar") {
    const Table t = parse_csv("c,d\n\"a, b\",z\n", "t");
    auto m = memorized({encode_row(t.rows[0], t.schema, Permutation::identity(2), CodecConfig{})});
    BackendGenerator gen(*m, ", ");
    const ClauseGrammar g = ClauseGrammar::for_schema(t.schema, CodecConfig{});
    const auto text = gen.complete("c is ", SamplingConfig{}, 1, &g);
    auto d = decode_row(parse_sentence(text, t.schema, CodecConfig{}), t.schema, DecodePolicy::strict);
    REQUIRE(d);
    CHECK(*d.row == t.rows[0]);
}
