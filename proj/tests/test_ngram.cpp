#include <cmath>
#include <map>
#include <numeric>

#include "doctest.h"
#include "tabsynth/error.hpp"
#include "tabsynth/ngram.hpp"
#include "tabsynth/random.hpp"

using namespace tabsynth;

namespace {

Corpus corpus_of(NgramModel& m, const std::vector<std::string>& sentences) {
    return make_corpus(m, sentences, ", ", "test");
}

}  // namespace

TEST_CASE("vocabulary basics") {
    const Vocabulary v = build_vocabulary({"Age is 1 8"}, ", ");
    for (const char* t : {"<bos>", "<eos>", ",", "is", "<unk>", "Age", "1", "8"}) {
        CHECK(v.contains(t));
    }
    const Vocabulary shared = build_vocabulary({"Age is 1", "Age is 2, B is x"}, ", ");
    CHECK(std::count(shared.tokens().begin(), shared.tokens().end(), "Age") == 1);
    CHECK_THROWS_AS(build_vocabulary({}, ", "), Error);
    CHECK(tokenize("A is 1 8, B is x", ", ") == std::vector<std::string>{"A", "is", "1", "8", ",", "B", "is", "x"});
    CHECK(detokenize(tokenize("A is 1 8, B is x", ", "), ", ") == "A is 1 8, B is x");
}

TEST_CASE("single sentence bigram with add-k") {
    NgramConfig cfg;
    cfg.order = 2;
    cfg.addK = 0.5;
    NgramModel m(Vocabulary{}, cfg);
    auto c = corpus_of(m, {"A"});
    m.pretrain(c, 1, 0);
    const double V = static_cast<double>(m.vocabulary().size());
    REQUIRE(V == 6.0);
    const TokenId a = m.vocabulary().id("A");
    const std::vector<TokenId> bos{special::bosId};
    const auto p = m.next_distribution(bos);
    CHECK(p[a] == doctest::Approx((1 + 0.5) / (1 + 0.5 * V)).epsilon(1e-14));
    const std::vector<TokenId> ctxA{a};
    CHECK(m.next_distribution(ctxA)[special::eosId] == doctest::Approx(1.5 / (1 + 0.5 * V)).epsilon(1e-14));
}

TEST_CASE("conditionals equal independent smoothed count ratios") {
    // Oracle: count string n-grams directly and apply the longest observed
    // suffix rule by hand.
    Rng rng(42);
    const std::vector<std::string> words = {"a", "b", "c", "d"};
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::string> sentences;
        const std::size_t n = 1 + rng.index(20);
        for (std::size_t s = 0; s < n; ++s) {
            std::string text;
            const std::size_t len = 1 + rng.index(6);
            for (std::size_t i = 0; i < len; ++i) {
                text += (i ? " " : "") + words[rng.index(words.size())];
            }
            sentences.push_back(text);
        }
        NgramConfig cfg;
        cfg.order = 1 + static_cast<int>(rng.index(4));
        cfg.addK = 0.01 + rng.uniform();
        NgramModel m(Vocabulary{}, cfg);
        const Corpus corpus = corpus_of(m, sentences);
        m.pretrain(corpus, 1, 0);
        const auto& vocab = m.vocabulary();

        std::map<std::vector<std::string>, std::map<std::string, double>> counts;
        for (const auto& s : sentences) {
            std::vector<std::string> toks{"<bos>"};
            for (auto& t : tokenize(s, ", ")) {
                toks.push_back(t);
            }
            toks.push_back("<eos>");
            for (std::size_t i = 1; i < toks.size(); ++i) {
                for (std::size_t len = 0; len < static_cast<std::size_t>(cfg.order) && len <= i; ++len) {
                    std::vector<std::string> ctx(toks.begin() + (i - len), toks.begin() + i);
                    counts[ctx][toks[i]] += 1;
                }
            }
        }
        for (int q = 0; q < 50; ++q) {
            std::vector<TokenId> ctx{special::bosId};
            const std::size_t len = rng.index(5);
            for (std::size_t i = 0; i < len; ++i) {
                ctx.push_back(vocab.id(words[rng.index(words.size())]));
            }
            const auto dist = m.next_distribution(ctx);
            std::vector<std::string> strCtx;
            for (auto id : ctx) {
                strCtx.push_back(vocab.token(id));
            }
            const std::map<std::string, double>* hit = nullptr;
            for (std::size_t l = std::min<std::size_t>(strCtx.size(), cfg.order - 1) + 1; l-- > 0;) {
                std::vector<std::string> suffix(strCtx.end() - l, strCtx.end());
                if (auto it = counts.find(suffix); it != counts.end()) {
                    hit = &it->second;
                    break;
                }
            }
            REQUIRE(hit != nullptr);
            double total = 0;
            for (auto& [t, c] : *hit) {
                total += c;
            }
            for (std::size_t w = 0; w < vocab.size(); ++w) {
                auto it = hit->find(vocab.token(w));
                const double c = it == hit->end() ? 0.0 : it->second;
                const double expected = (c + cfg.addK) / (total + cfg.addK * vocab.size());
                CHECK(std::abs(dist[w] - expected) <= 1e-12);
            }
        }
    }
}

TEST_CASE("finetune with weight one equals pretrain") {
    NgramConfig cfg;
    cfg.finetuneWeight = 1.0;
    NgramModel a(Vocabulary{}, cfg), b(Vocabulary{}, cfg);
    const std::vector<std::string> data = {"x is 1", "x is 2, y is q"};
    a.pretrain(corpus_of(a, data), 1, 0);
    b.finetune(corpus_of(b, data), 1, 0);
    const std::vector<TokenId> ctx{special::bosId, a.vocabulary().id("x")};
    CHECK(a.next_distribution(ctx) == b.next_distribution(ctx));
}

TEST_CASE("huge fine-tune weight approaches the downstream-only model") {
    NgramConfig cfg;
    cfg.finetuneWeight = 1e9;
    NgramModel mixed(Vocabulary{}, cfg);
    mixed.pretrain(corpus_of(mixed, {"x is 1", "x is 3, y is q"}), 1, 0);
    const std::vector<std::string> down = {"x is 2, y is r", "y is q"};
    mixed.finetune(corpus_of(mixed, down), 1, 0);

    // Same effective smoothing as the mixed model once its counts are scaled.
    NgramConfig plain;
    plain.addK = cfg.addK / cfg.finetuneWeight;
    NgramModel alone(mixed.vocabulary(), plain);
    alone.pretrain(corpus_of(alone, down), 1, 0);
    const auto& v = mixed.vocabulary();
    for (const auto& ctx : std::vector<std::vector<TokenId>>{
             {special::bosId}, {special::bosId, v.id("x"), special::isId}, {special::bosId, v.id("y")}}) {
        const auto p = mixed.next_distribution(ctx);
        const auto q = alone.next_distribution(ctx);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(std::abs(p[i] - q[i]) <= 1e-6);
        }
    }
}

TEST_CASE("zero steps leaves the model unchanged") {
    NgramModel m(Vocabulary{}, NgramConfig{});
    m.pretrain(corpus_of(m, {"x is 1"}), 1, 0);
    const Corpus down = corpus_of(m, {"z is 9"});
    const auto before = m.next_distribution(std::vector<TokenId>{special::bosId});
    m.finetune(down, 0, 0);
    CHECK(m.next_distribution(std::vector<TokenId>{special::bosId}) == before);
    CHECK(m.count(std::vector<TokenId>{}, m.vocabulary().id("z")) == 0.0);
}

TEST_CASE("sequence log-probability") {
    NgramConfig cfg;
    cfg.order = 2;
    cfg.addK = 1e-300;
    NgramModel chain(Vocabulary{}, cfg);
    chain.pretrain(corpus_of(chain, {"A"}), 1, 0);
    const std::vector<TokenId> two{special::bosId, chain.vocabulary().id("A")};
    CHECK(sequence_logprob(chain, two) == doctest::Approx(0.0));

    std::vector<std::string> toks;
    for (int i = 0; i < 5; ++i) {
        toks.push_back("t" + std::to_string(i));
    }
    NgramModel uniform(Vocabulary(toks), NgramConfig{});
    REQUIRE(uniform.vocabulary().size() == 10);
    const std::vector<TokenId> four{0, 5, 6, 7};
    CHECK(sequence_logprob(uniform, four) == doctest::Approx(3 * std::log(0.1)));

    NgramModel m(Vocabulary{}, NgramConfig{});
    m.pretrain(corpus_of(m, {"x is 1", "x is 2"}), 1, 0);
    const std::vector<TokenId> seq{special::bosId, m.vocabulary().id("x"), special::isId, m.vocabulary().id("2")};
    double termwise = 0.0;
    for (std::size_t i = 1; i < seq.size(); ++i) {
        termwise += std::log(m.next_distribution(std::span(seq).first(i))[seq[i]]);
    }
    const double lp = sequence_logprob(m, seq);
    CHECK(lp == doctest::Approx(termwise).epsilon(1e-12));
    CHECK(std::exp(lp) > 0.0);
    CHECK(std::exp(lp) <= 1.0);
}

TEST_CASE("decoder matches direct evaluation") {
    NgramConfig cfg;
    cfg.order = 3;
    NgramModel m(Vocabulary{}, cfg);
    m.pretrain(corpus_of(m, {"a b c", "a c b", "b a"}), 1, 0);
    auto dec = m.start();
    std::vector<TokenId> ctx{special::bosId, m.vocabulary().id("a"), m.vocabulary().id("c"), m.vocabulary().id("b")};
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        dec->push(ctx[i]);
        CHECK(dec->distribution() == m.next_distribution(std::span(ctx).first(i + 1)));
    }
}
