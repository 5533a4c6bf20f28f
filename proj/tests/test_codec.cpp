#include <map>
#include <set>

#include "doctest.h"
#include "tabsynth/codec.hpp"
#include "tabsynth/random.hpp"
#include "tabsynth/table.hpp"

using namespace tabsynth;

namespace {

Table adult_row() {
    return parse_csv("Age,Education,Occupation,Income\n18,HS-grad,Machine-op-inspct,≤ 50K\n", "t");
}

}  // namespace

TEST_CASE("encode matches the worked example with character numbers") {
    const Table t = adult_row();
    CodecConfig cfg;
    CHECK(encode_row(t.rows[0], t.schema, Permutation::identity(4), cfg) ==
          "Age is 1 8, Education is HS-grad, Occupation is Machine-op-inspct, Income is ≤ 50K");
    cfg.useCharacterNumbers = false;
    CHECK(encode_row(t.rows[0], t.schema, Permutation::identity(4), cfg) ==
          "Age is 18, Education is HS-grad, Occupation is Machine-op-inspct, Income is ≤ 50K");
}

TEST_CASE("single column row") {
    const Table t = parse_csv("X\n5\n", "t");
    CHECK(encode_row(t.rows[0], t.schema, random_permutation(1, 3), CodecConfig{}) == "X is 5");
}

TEST_CASE("spelled characters") {
    CHECK(spell_characters("-12.5") == "- 1 2 . 5");
    CHECK(spell_characters("18") == "1 8");
}

TEST_CASE("parse inverts the encoding") {
    const Table t = parse_csv("Age,Income\n18,≤ 50K\n", "t");
    const auto p = parse_sentence("Age is 1 8, Income is ≤ 50K", t.schema, CodecConfig{});
    REQUIRE(p.ok());
    REQUIRE(p.clauses.size() == 2);
    CHECK(p.clauses[0].value == "18");
    CHECK(p.clauses[1].value == "≤ 50K");
}

TEST_CASE("parse diagnostics") {
    const Table t = parse_csv("Age,Income\n18,a\n", "t");
    auto dup = parse_sentence("Age is 1 8, Age is 2 0", t.schema, CodecConfig{});
    REQUIRE_FALSE(dup.ok());
    CHECK(dup.diagnostics[0].kind == DiagnosticKind::duplicateFeature);
    CHECK(dup.clauses.size() == 1);
    CHECK(dup.clauses[0].value == "18");

    auto unknown = parse_sentence("Agee is 18", t.schema, CodecConfig{});
    REQUIRE_FALSE(unknown.ok());
    CHECK(unknown.diagnostics[0].kind == DiagnosticKind::unknownFeature);

    auto bad = parse_sentence("Age is x y", t.schema, CodecConfig{});
    REQUIRE_FALSE(bad.ok());
    CHECK(bad.diagnostics[0].kind == DiagnosticKind::typeMismatch);
}

TEST_CASE("strict and partial decoding") {
    const Table t = parse_csv("A,B\n1,b\n", "t");
    const CodecConfig cfg;
    auto full = decode_row(parse_sentence("B is b, A is 1", t.schema, cfg), t.schema, DecodePolicy::strict);
    REQUIRE(full);
    CHECK(*full.row == t.rows[0]);

    const auto half = parse_sentence("A is 1", t.schema, cfg);
    CHECK_FALSE(decode_row(half, t.schema, DecodePolicy::strict));
    auto partial = decode_row(half, t.schema, DecodePolicy::partial);
    REQUIRE(partial);
    CHECK(partial.row->cells[1].is_missing());
}

TEST_CASE("permutations of three are uniform") {
    // Six cells at p = 1/6 over 6000 draws: sd = sqrt(6000 * 5/36) / 6000 =
    // 0.0048, so 0.02 is more than four sd.
    std::map<std::vector<std::size_t>, int> counts;
    for (std::uint64_t s = 0; s < 6000; ++s) {
        counts[random_permutation(3, s).order()]++;
    }
    REQUIRE(counts.size() == 6);
    double chi2 = 0.0;
    for (const auto& [perm, c] : counts) {
        CHECK(std::abs(c / 6000.0 - 1.0 / 6.0) <= 0.02);
        chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
    }
    // chi-square with 5 dof, 0.999 quantile.
    CHECK(chi2 < 20.52);
    CHECK(random_permutation(7, 11) == random_permutation(7, 11));
}

TEST_CASE("permutation algebra") {
    const Permutation p = random_permutation(6, 5);
    CHECK(p.compose(p.inverse()) == Permutation::identity(6));
    CHECK(p.inverse().compose(p) == Permutation::identity(6));
}

TEST_CASE("decoding is permutation invariant and covers awkward categories") {
    const Table t = parse_csv("n,c,y\n-12.5,\"a, b\",\" pad\"\n3e2,\"\"\"q\",plain\n", "t");
    for (const auto& row : t.rows) {
        for (std::uint64_t s = 0; s < 6; ++s) {
            const auto text = encode_row(row, t.schema, random_permutation(3, s), CodecConfig{});
            auto d = decode_row(parse_sentence(text, t.schema, CodecConfig{}), t.schema, DecodePolicy::strict);
            REQUIRE(d);
            CHECK(*d.row == row);
        }
    }
}

TEST_CASE("dummy names and label slot") {
    LoadOptions opts;
    opts.labelColumn = "y";
    const Table t = parse_csv("a,b,y\n1,2,k\n3,4,j\n", "t", opts);
    CodecConfig cfg;
    cfg.useRealFeatureNames = false;
    const auto names = rendered_names(t.schema, cfg);
    REQUIRE(names.size() == 3);
    CHECK(names[0] == "V1");
    CHECK(names[1] == "V2");
    CHECK(names[2] == "V3");
    const auto text = encode_row(t.rows[0], t.schema, Permutation::identity(3), cfg);
    CHECK(text == "V1 is 1, V2 is 2, V3 is k");
    auto d = decode_row(parse_sentence(text, t.schema, cfg), t.schema, DecodePolicy::strict, true);
    REQUIRE(d);
    CHECK(d.row->label->text() == "k");
}

TEST_CASE("separator inside a column name is rejected") {
    const Table t = parse_csv("\"a, b\"\n1\n", "t");
    CHECK_THROWS(validate_codec(t.schema, CodecConfig{}));
}
