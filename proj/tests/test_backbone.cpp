#include "desk_data.hpp"
#include "doctest.h"
#include "tabsynth/backbone.hpp"
#include "tabsynth/error.hpp"
#include "tabsynth/metrics.hpp"

using namespace tabsynth;

namespace {

Table labeled(const std::string& csv, const std::string& label, Task task = Task::classification) {
    LoadOptions opts;
    opts.labelColumn = label;
    opts.task = task;
    return parse_csv(csv, "t", opts);
}

std::vector<std::string> texts(const std::vector<Cell>& cells) {
    std::vector<std::string> out;
    for (const auto& c : cells) {
        out.push_back(c.text());
    }
    return out;
}

std::vector<std::string> labels_of(const Table& t) {
    std::vector<std::string> out;
    for (const auto& r : t.rows) {
        out.push_back(r.label->text());
    }
    return out;
}

}  // namespace

TEST_CASE("separable data needs one split") {
    const Table t = labeled("x,y\n1,a\n2,a\n3,a\n10,b\n11,b\n12,b\n", "y");
    CartTree tree(CartConfig{1, 1});
    tree.fit(t);
    CHECK(accuracy(texts(tree.predict(t)), labels_of(t)).value == 1.0);
    CHECK(tree.depth() == 1);
}

TEST_CASE("cart solves xor at depth two") {
    const Table t = labeled("a,b,y\n0,0,n\n0,1,p\n1,0,p\n1,1,n\n", "y");
    CartTree tree(CartConfig{2, 1});
    tree.fit(t);
    CHECK(accuracy(texts(tree.predict(t)), labels_of(t)).value == 1.0);
}

TEST_CASE("depth-zero cart predicts the majority") {
    const Table t = labeled("x,y\n1,a\n2,b\n3,b\n", "y");
    CartTree tree(CartConfig{0, 1});
    tree.fit(t);
    const Table s = parse_csv("x\n1\n5\n", "s");
    const Table l = label_synthetic(tree, s);
    for (const auto& r : l.rows) {
        CHECK(r.label->text() == "b");
    }
}

TEST_CASE("cart does not depend on row order") {
    const Table t = desk::desk_table(300, 8);
    Table shuffled = t;
    std::reverse(shuffled.rows.begin(), shuffled.rows.end());
    CartTree a, b;
    a.fit(t);
    b.fit(shuffled);
    const Table test = desk::desk_table(100, 9);
    CHECK(texts(a.predict(test)) == texts(b.predict(test)));
}

TEST_CASE("cart regression fits piecewise means") {
    const Table t = labeled("x,y\n1,1\n2,1\n3,5\n4,5\n", "y", Task::regression);
    CartTree tree(CartConfig{3, 1});
    tree.fit(t);
    const auto v = tree.predict_values(t);
    CHECK(v == std::vector<double>{1, 1, 5, 5});
    CHECK(evaluate(tree, t).value == 1.0);
}

TEST_CASE("knn with k equal to the table size predicts the global majority") {
    const Table t = labeled("x,y\n1,a\n2,b\n3,b\n9,a\n10,b\n", "y");
    KnnPredictor knn(KnnConfig{5});
    knn.fit(t);
    for (const auto& c : knn.predict(t)) {
        CHECK(c.text() == "b");
    }
    const Table r = labeled("x,y\n1,1\n2,2\n3,6\n", "y", Task::regression);
    KnnPredictor mean(KnnConfig{3});
    mean.fit(r);
    for (double v : mean.predict_values(r)) {
        CHECK(v == 3.0);
    }
    KnnPredictor tooMany(KnnConfig{9});
    CHECK_THROWS_AS(tooMany.fit(t), Error);
}

TEST_CASE("1-nn labels a copied row with its source label") {
    const Table t = desk::desk_table(50, 3);
    KnnPredictor nn(KnnConfig{1});
    nn.fit(t);
    Table feats = t.with_rows({});
    feats.schema = t.schema.without_label();
    Row r = t.rows[17];
    r.label.reset();
    feats.rows.push_back(r);
    const Table l = label_synthetic(nn, feats);
    CHECK(l.rows[0].label == t.rows[17].label);
}

TEST_CASE("labeling keeps row count and handles empty input") {
    const Table t = desk::desk_table(40, 4);
    CartTree tree;
    tree.fit(t);
    Table empty;
    empty.schema = t.schema.without_label();
    CHECK(label_synthetic(tree, empty).empty());
    const Table wrong = parse_csv("zzz\n1\n", "w");
    CHECK_THROWS_AS(label_synthetic(tree, wrong), Error);
}

TEST_CASE("fit rejects degenerate tables") {
    CartTree tree;
    CHECK_THROWS_AS(tree.fit(labeled("x,y\n1,a\n", "y")), Error);
    CHECK_THROWS_AS(tree.fit(labeled("x,y\n1,a\n2,a\n", "y")), Error);
}

TEST_CASE("augmentation with an empty synthetic table equals the original fit") {
    const Table t = desk::desk_table(200, 5);
    const Table test = desk::desk_table(100, 6);
    CartTree proto;
    Table empty = t.with_rows({});
    auto fit = train_with_augmentation(proto, empty, t);
    CartTree plain;
    plain.fit(t);
    CHECK(texts(fit.predictor->predict(test)) == texts(plain.predict(test)));
    CHECK_THROWS_AS(train_with_augmentation(proto, t, empty), Error);
}

TEST_CASE("knn augmentation is the concatenation fit") {
    const Table a = desk::desk_table(60, 1);
    const Table b = desk::desk_table(60, 2);
    const Table test = desk::desk_table(40, 3);
    KnnPredictor proto(KnnConfig{3});
    auto fit = train_with_augmentation(proto, a, b, 4);
    KnnPredictor direct(KnnConfig{3});
    direct.fit(concatenate(a, b));
    CHECK(texts(fit.predictor->predict(test)) == texts(direct.predict(test)));
}

TEST_CASE("unseen categories and missing cells are tolerated at predict time") {
    const Table t = desk::desk_table(100, 7);
    CartTree tree;
    tree.fit(t);
    const Table odd = parse_csv("age,income,hours,color,region\n30,,40,purple,\n", "o",
                                LoadOptions{std::nullopt, Task::classification, t.schema.without_label()});
    CHECK(tree.predict(odd).size() == 1);
}
