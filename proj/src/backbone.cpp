#include "tabsynth/backbone.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include <unistd.h>

#include "tabsynth/error.hpp"
#include "tabsynth/sampler.hpp"
#include "tabsynth/subprocess.hpp"

namespace tabsynth {

namespace {

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::size_t argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

}  // namespace

FeatureEncoder::FeatureEncoder(const Table& train)
    : columns_(train.schema.columns), fill_(fallback_fill(train)) {
    categories_.resize(columns_.size());
    ranges_.assign(columns_.size(), 0.0);
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (fill_[j].is_missing()) {
            throw Error(ErrorKind::data, "column '" + columns_[j].name + "' has no observed values");
        }
        if (columns_[j].kind == ColumnKind::categorical) {
            std::vector<std::string>& cats = categories_[j];
            for (const auto& row : train.rows) {
                if (!row.cells[j].is_missing()) {
                    cats.push_back(row.cells[j].text());
                }
            }
            std::sort(cats.begin(), cats.end());
            cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
        } else {
            double lo = INFINITY;
            double hi = -INFINITY;
            for (const auto& row : train.rows) {
                if (!row.cells[j].is_missing()) {
                    lo = std::min(lo, row.cells[j].value());
                    hi = std::max(hi, row.cells[j].value());
                }
            }
            ranges_[j] = hi - lo;
        }
    }
}

std::vector<double> FeatureEncoder::encode(const Row& row) const {
    std::vector<double> out(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        const Cell& cell = row.cells[j].is_missing() ? fill_[j] : row.cells[j];
        if (columns_[j].kind == ColumnKind::numerical) {
            out[j] = cell.value();
        } else {
            const auto& cats = categories_[j];
            auto it = std::lower_bound(cats.begin(), cats.end(), cell.text());
            out[j] = (it != cats.end() && *it == cell.text()) ? static_cast<double>(it - cats.begin()) : -1.0;
        }
    }
    return out;
}

std::vector<std::vector<double>> FeatureEncoder::encode(const Table& table) const {
    check_schema(table.schema);
    std::vector<std::vector<double>> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        out.push_back(encode(row));
    }
    return out;
}

void FeatureEncoder::check_schema(const Schema& schema) const {
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (j >= schema.columns.size()) {
            throw Error(ErrorKind::data, "feature table lacks column '" + columns_[j].name + "'");
        }
        if (schema.columns[j].name != columns_[j].name) {
            throw Error(ErrorKind::data, "feature column '" + schema.columns[j].name + "' does not match '" +
                                             columns_[j].name + "'");
        }
        if (schema.columns[j].kind != columns_[j].kind) {
            throw Error(ErrorKind::data, "feature column '" + columns_[j].name + "' is " +
                                             std::string(to_string(schema.columns[j].kind)) + ", expected " +
                                             std::string(to_string(columns_[j].kind)));
        }
    }
    if (schema.columns.size() > columns_.size()) {
        throw Error(ErrorKind::data, "unexpected feature column '" + schema.columns[columns_.size()].name + "'");
    }
}

std::vector<double> Predictor::begin_fit(const Table& train) {
    if (!train.schema.label) {
        throw Error(ErrorKind::data, "training table '" + train.sourceId + "' has no label column");
    }
    if (train.rows.size() < 2) {
        throw Error(ErrorKind::data, "training table needs at least two rows");
    }
    train.validate();
    schema_ = train.schema;
    classes_.clear();
    std::vector<double> y;
    y.reserve(train.rows.size());
    if (schema_.label->task == Task::classification) {
        classes_ = train.class_values();
        if (classes_.size() < 2) {
            throw Error(ErrorKind::data, "classification training table has a single class");
        }
        schema_.classCount = classes_.size();
        for (const auto& row : train.rows) {
            auto it = std::lower_bound(classes_.begin(), classes_.end(), row.label->text());
            y.push_back(static_cast<double>(it - classes_.begin()));
        }
    } else {
        for (const auto& row : train.rows) {
            if (row.label->kind() != Cell::Kind::number) {
                throw Error(ErrorKind::data, "regression label '" + row.label->text() + "' is not a number");
            }
            y.push_back(row.label->value());
        }
    }
    return y;
}

void Predictor::require_fitted() const {
    if (!fitted_) {
        throw Error(ErrorKind::usage, "predictor used before fit");
    }
}

std::vector<Cell> Predictor::predict(const Table& features) const {
    require_fitted();
    std::vector<Cell> out;
    out.reserve(features.rows.size());
    if (task() == Task::classification) {
        for (const auto& scores : predict_scores(features)) {
            out.push_back(Cell::category(classes_[argmax(scores)]));
        }
    } else {
        for (double v : predict_values(features)) {
            out.push_back(Cell::number(format_number(v), v));
        }
    }
    return out;
}

// ---------------------------------------------------------------- CART

CartTree::CartTree(CartConfig config) : config_(config) {
    if (config_.maxDepth < 0 || config_.minLeaf < 1) {
        throw Error(ErrorKind::config, "CART needs max depth >= 0 and min leaf >= 1");
    }
}

void CartTree::fit(const Table& train) {
    const std::vector<double> y0 = begin_fit(train);
    encoder_ = FeatureEncoder(train);
    const auto x0 = encoder_.encode(train);

    std::vector<std::size_t> order(x0.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x0[a] != x0[b]) {
            return x0[a] < x0[b];
        }
        return y0[a] < y0[b];
    });
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (std::size_t i : order) {
        x.push_back(x0[i]);
        y.push_back(y0[i]);
    }
    nodes_.clear();
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    build(x, y, std::move(idx), 0);
    fitted_ = true;
}

int CartTree::build(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                    std::vector<std::size_t> idx, int level) {
    const bool classification = task() == Task::classification;
    const std::size_t nClasses = classes_.size();
    const auto n = static_cast<double>(idx.size());

    Node node;
    node.level = level;
    double impurity = 0.0;  // total (not per-row) impurity of this node
    if (classification) {
        node.distribution.assign(nClasses, 0.0);
        for (std::size_t i : idx) {
            node.distribution[static_cast<std::size_t>(y[i])] += 1.0;
        }
        double sumSq = 0.0;
        for (double& c : node.distribution) {
            sumSq += c * c;
            c /= n;
        }
        impurity = n - sumSq / n;
    } else {
        double sum = 0.0;
        for (std::size_t i : idx) {
            sum += y[i];
        }
        node.value = sum / n;
        for (std::size_t i : idx) {
            impurity += (y[i] - node.value) * (y[i] - node.value);
        }
    }
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);

    const auto minLeaf = static_cast<std::size_t>(config_.minLeaf);
    if (level >= config_.maxDepth || idx.size() < 2 * minLeaf || impurity <= 1e-12) {
        return self;
    }

    double bestGain = -1e-9;
    int bestFeature = -1;
    double bestThreshold = 0.0;
    bool bestCategorical = false;

    const std::size_t m = encoder_.columns().size();
    std::vector<std::size_t> sorted = idx;
    for (std::size_t j = 0; j < m; ++j) {
        const bool cat = encoder_.is_categorical(j);
        std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return x[a][j] < x[b][j]; });
        if (!cat) {
            // Sweep thresholds left to right with running statistics.
            std::vector<double> leftCounts(nClasses, 0.0);
            std::vector<double> rightCounts(nClasses, 0.0);
            double lSum = 0.0, lSq = 0.0, rSum = 0.0, rSq = 0.0;
            for (std::size_t i : sorted) {
                if (classification) {
                    rightCounts[static_cast<std::size_t>(y[i])] += 1.0;
                } else {
                    rSum += y[i];
                    rSq += y[i] * y[i];
                }
            }
            for (std::size_t p = 0; p + 1 < sorted.size(); ++p) {
                const std::size_t i = sorted[p];
                if (classification) {
                    leftCounts[static_cast<std::size_t>(y[i])] += 1.0;
                    rightCounts[static_cast<std::size_t>(y[i])] -= 1.0;
                } else {
                    lSum += y[i];
                    lSq += y[i] * y[i];
                    rSum -= y[i];
                    rSq -= y[i] * y[i];
                }
                const double a = x[i][j];
                const double b = x[sorted[p + 1]][j];
                if (!(a < b)) {
                    continue;
                }
                const std::size_t nl = p + 1;
                const std::size_t nr = sorted.size() - nl;
                if (nl < minLeaf || nr < minLeaf) {
                    continue;
                }
                double childImpurity = 0.0;
                if (classification) {
                    double sl = 0.0, sr = 0.0;
                    for (std::size_t c = 0; c < nClasses; ++c) {
                        sl += leftCounts[c] * leftCounts[c];
                        sr += rightCounts[c] * rightCounts[c];
                    }
                    childImpurity = (static_cast<double>(nl) - sl / static_cast<double>(nl)) +
                                    (static_cast<double>(nr) - sr / static_cast<double>(nr));
                } else {
                    childImpurity = (lSq - lSum * lSum / static_cast<double>(nl)) +
                                    (rSq - rSum * rSum / static_cast<double>(nr));
                }
                const double gain = impurity - childImpurity;
                if (gain > bestGain + 1e-12) {
                    bestGain = gain;
                    bestFeature = static_cast<int>(j);
                    bestThreshold = a + (b - a) / 2.0;
                    bestCategorical = false;
                }
            }
        } else {
            // One-vs-rest on each category present, in category order.
            std::size_t p = 0;
            while (p < sorted.size()) {
                std::size_t q = p;
                const double category = x[sorted[p]][j];
                std::vector<double> inCounts(nClasses, 0.0);
                double iSum = 0.0, iSq = 0.0;
                while (q < sorted.size() && x[sorted[q]][j] == category) {
                    const std::size_t i = sorted[q];
                    if (classification) {
                        inCounts[static_cast<std::size_t>(y[i])] += 1.0;
                    } else {
                        iSum += y[i];
                        iSq += y[i] * y[i];
                    }
                    ++q;
                }
                const std::size_t nl = q - p;
                const std::size_t nr = sorted.size() - nl;
                p = q;
                if (nl < minLeaf || nr < minLeaf) {
                    continue;
                }
                double childImpurity = 0.0;
                if (classification) {
                    double sl = 0.0, sr = 0.0;
                    for (std::size_t c = 0; c < nClasses; ++c) {
                        const double total = node.distribution[c] * n;
                        const double out = total - inCounts[c];
                        sl += inCounts[c] * inCounts[c];
                        sr += out * out;
                    }
                    childImpurity = (static_cast<double>(nl) - sl / static_cast<double>(nl)) +
                                    (static_cast<double>(nr) - sr / static_cast<double>(nr));
                } else {
                    double tSum = 0.0, tSq = 0.0;
                    for (std::size_t i : sorted) {
                        tSum += y[i];
                        tSq += y[i] * y[i];
                    }
                    const double oSum = tSum - iSum;
                    const double oSq = tSq - iSq;
                    childImpurity = (iSq - iSum * iSum / static_cast<double>(nl)) +
                                    (oSq - oSum * oSum / static_cast<double>(nr));
                }
                const double gain = impurity - childImpurity;
                if (gain > bestGain + 1e-12) {
                    bestGain = gain;
                    bestFeature = static_cast<int>(j);
                    bestThreshold = category;
                    bestCategorical = true;
                }
            }
        }
    }
    if (bestFeature < 0) {
        return self;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
        const double v = x[i][static_cast<std::size_t>(bestFeature)];
        const bool goLeft = bestCategorical ? v == bestThreshold : v <= bestThreshold;
        (goLeft ? left : right).push_back(i);
    }
    const int l = build(x, y, std::move(left), level + 1);
    const int r = build(x, y, std::move(right), level + 1);
    Node& self_node = nodes_[static_cast<std::size_t>(self)];
    self_node.feature = bestFeature;
    self_node.categorical = bestCategorical;
    self_node.threshold = bestThreshold;
    self_node.left = l;
    self_node.right = r;
    return self;
}

const CartTree::Node& CartTree::leaf_for(const std::vector<double>& x) const {
    const Node* node = &nodes_.front();
    while (node->feature >= 0) {
        const double v = x[static_cast<std::size_t>(node->feature)];
        const bool goLeft = node->categorical ? v == node->threshold : v <= node->threshold;
        node = &nodes_[static_cast<std::size_t>(goLeft ? node->left : node->right)];
    }
    return *node;
}

int CartTree::depth() const noexcept {
    int d = 0;
    for (const auto& n : nodes_) {
        d = std::max(d, n.level);
    }
    return d;
}

std::vector<std::vector<double>> CartTree::predict_scores(const Table& features) const {
    require_fitted();
    if (task() != Task::classification) {
        throw Error(ErrorKind::usage, "class scores requested from a regression tree");
    }
    std::vector<std::vector<double>> out;
    for (const auto& x : encoder_.encode(features)) {
        out.push_back(leaf_for(x).distribution);
    }
    return out;
}

std::vector<double> CartTree::predict_values(const Table& features) const {
    require_fitted();
    if (task() != Task::regression) {
        throw Error(ErrorKind::usage, "values requested from a classification tree");
    }
    std::vector<double> out;
    for (const auto& x : encoder_.encode(features)) {
        out.push_back(leaf_for(x).value);
    }
    return out;
}

// ---------------------------------------------------------------- kNN

KnnPredictor::KnnPredictor(KnnConfig config) : config_(config) {
    if (config_.k < 1) {
        throw Error(ErrorKind::config, "kNN needs k >= 1");
    }
}

void KnnPredictor::fit(const Table& train) {
    y_ = begin_fit(train);
    if (static_cast<std::size_t>(config_.k) > train.rows.size()) {
        throw Error(ErrorKind::config, "kNN k = " + std::to_string(config_.k) + " exceeds the " +
                                           std::to_string(train.rows.size()) + " training rows");
    }
    encoder_ = FeatureEncoder(train);
    x_ = encoder_.encode(train);
    fitted_ = true;
}

std::vector<std::size_t> KnnPredictor::neighbours(const std::vector<double>& x) const {
    std::vector<std::pair<double, std::size_t>> d(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) {
        double dist = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (encoder_.is_categorical(j)) {
                dist += (x[j] == x_[i][j] && x[j] >= 0.0) ? 0.0 : 1.0;
            } else if (encoder_.range(j) > 0.0) {
                dist += std::abs(x[j] - x_[i][j]) / encoder_.range(j);
            }
        }
        d[i] = {dist, i};
    }
    const auto k = static_cast<std::size_t>(config_.k);
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = d[i].second;
    }
    return out;
}

std::vector<std::vector<double>> KnnPredictor::predict_scores(const Table& features) const {
    require_fitted();
    if (task() != Task::classification) {
        throw Error(ErrorKind::usage, "class scores requested from a regression kNN");
    }
    std::vector<std::vector<double>> out;
    for (const auto& x : encoder_.encode(features)) {
        std::vector<double> s(classes_.size(), 0.0);
        const auto nb = neighbours(x);
        for (std::size_t i : nb) {
            s[static_cast<std::size_t>(y_[i])] += 1.0 / static_cast<double>(nb.size());
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<double> KnnPredictor::predict_values(const Table& features) const {
    require_fitted();
    if (task() != Task::regression) {
        throw Error(ErrorKind::usage, "values requested from a classification kNN");
    }
    std::vector<double> out;
    for (const auto& x : encoder_.encode(features)) {
        double sum = 0.0;
        const auto nb = neighbours(x);
        for (std::size_t i : nb) {
            sum += y_[i];
        }
        out.push_back(sum / static_cast<double>(nb.size()));
    }
    return out;
}

// ---------------------------------------------------------------- plugin

PluginPredictor::PluginPredictor(std::string command) : command_(std::move(command)) {
    static std::atomic<unsigned> counter{0};
    workDir_ = std::filesystem::temp_directory_path() /
               ("tabsynth-backbone-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
}

PluginPredictor::~PluginPredictor() {
    std::error_code ec;
    std::filesystem::remove_all(workDir_, ec);
}

void PluginPredictor::fit(const Table& train) {
    begin_fit(train);
    std::filesystem::create_directories(workDir_);
    const auto trainCsv = workDir_ / "train.csv";
    write_csv(train, trainCsv);
    auto argv = split_command(command_);
    argv.insert(argv.end(), {"train", trainCsv.string(), (workDir_ / "model").string()});
    const int code = run_process(argv);
    if (code != 0) {
        throw Error(ErrorKind::plugin, "backbone plugin train exited with status " + std::to_string(code));
    }
    fitted_ = true;
}

Table PluginPredictor::run_predict(const Table& features) const {
    require_fitted();
    const auto featuresCsv = workDir_ / "features.csv";
    const auto outCsv = workDir_ / "predictions.csv";
    std::error_code ec;
    std::filesystem::remove(outCsv, ec);
    Table f = features;
    f.schema = features.schema.without_label();
    for (auto& row : f.rows) {
        row.label.reset();
    }
    write_csv(f, featuresCsv);
    auto argv = split_command(command_);
    argv.insert(argv.end(), {"predict", (workDir_ / "model").string(), featuresCsv.string(), outCsv.string()});
    const int code = run_process(argv);
    if (code != 0) {
        throw Error(ErrorKind::plugin, "backbone plugin predict exited with status " + std::to_string(code));
    }
    Table out;
    try {
        out = load_csv(outCsv);
    } catch (const Error& e) {
        throw Error(ErrorKind::plugin, std::string("backbone plugin output: ") + e.what());
    }
    if (out.rows.size() != features.rows.size() || out.schema.columns.empty()) {
        throw Error(ErrorKind::plugin, "backbone plugin returned " + std::to_string(out.rows.size()) +
                                           " predictions for " + std::to_string(features.rows.size()) + " rows");
    }
    return out;
}

std::vector<Cell> PluginPredictor::predict(const Table& features) const {
    const Table out = run_predict(features);
    std::vector<Cell> labels;
    for (const auto& row : out.rows) {
        const Cell& c = row.cells[0];
        if (c.is_missing()) {
            throw Error(ErrorKind::plugin, "backbone plugin returned an empty label");
        }
        if (task() == Task::classification) {
            labels.push_back(Cell::category(c.text()));
        } else {
            double v = 0.0;
            if (!parse_decimal(c.text(), v)) {
                throw Error(ErrorKind::plugin, "backbone plugin returned non-numeric value '" + c.text() + "'");
            }
            labels.push_back(Cell::number(c.text(), v));
        }
    }
    return labels;
}

std::vector<std::vector<double>> PluginPredictor::predict_scores(const Table& features) const {
    if (task() != Task::classification) {
        throw Error(ErrorKind::usage, "class scores requested from a regression plugin");
    }
    const Table out = run_predict(features);
    std::vector<std::vector<double>> scores;
    const bool hasScores = out.schema.columns.size() == classes_.size() + 1;
    for (const auto& row : out.rows) {
        std::vector<double> s(classes_.size(), 0.0);
        if (hasScores) {
            for (std::size_t c = 0; c < classes_.size(); ++c) {
                double v = 0.0;
                if (!parse_decimal(row.cells[c + 1].text(), v)) {
                    throw Error(ErrorKind::plugin, "backbone plugin returned a non-numeric score");
                }
                s[c] = v;
            }
        } else {
            // Labels only: one-hot scores.
            auto it = std::lower_bound(classes_.begin(), classes_.end(), row.cells[0].text());
            if (it == classes_.end() || *it != row.cells[0].text()) {
                throw Error(ErrorKind::plugin, "backbone plugin returned unknown class '" + row.cells[0].text() + "'");
            }
            s[static_cast<std::size_t>(it - classes_.begin())] = 1.0;
        }
        scores.push_back(std::move(s));
    }
    return scores;
}

std::vector<double> PluginPredictor::predict_values(const Table& features) const {
    std::vector<double> out;
    for (const auto& c : predict(features)) {
        out.push_back(c.value());
    }
    return out;
}

// ---------------------------------------------------------------- helpers

std::unique_ptr<Predictor> make_predictor(std::string_view spec, CartConfig cart, KnnConfig knn) {
    if (spec == "cart") {
        return std::make_unique<CartTree>(cart);
    }
    if (spec == "knn") {
        return std::make_unique<KnnPredictor>(knn);
    }
    if (spec.rfind("plugin:", 0) == 0 && spec.size() > 7) {
        return std::make_unique<PluginPredictor>(std::string(spec.substr(7)));
    }
    throw Error(ErrorKind::usage, "unknown backbone '" + std::string(spec) + "' (expected cart, knn or plugin:<cmd>)");
}

Table label_synthetic(const Predictor& predictor, const Table& synthFeatures) {
    if (!predictor.fitted()) {
        throw Error(ErrorKind::usage, "labeling needs a fitted predictor");
    }
    const Schema& schema = predictor.schema();
    Schema featureSchema = synthFeatures.schema.without_label();
    Schema expected = schema.without_label();
    for (std::size_t j = 0; j < std::max(featureSchema.size(), expected.size()); ++j) {
        if (j >= featureSchema.size() || j >= expected.size() || !(featureSchema.columns[j] == expected.columns[j])) {
            const std::string name = j < featureSchema.size() ? featureSchema.columns[j].name : expected.columns[j].name;
            throw Error(ErrorKind::data, "synthetic table column '" + name + "' does not match the training schema");
        }
    }
    Table out;
    out.schema = schema;
    out.sourceId = synthFeatures.sourceId;
    if (synthFeatures.rows.empty()) {
        return out;
    }
    Table features = synthFeatures;
    features.schema = featureSchema;
    for (auto& row : features.rows) {
        row.label.reset();
    }
    auto labels = predictor.predict(features);
    out.rows = std::move(features.rows);
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        out.rows[i].label = std::move(labels[i]);
    }
    return out;
}

Table concatenate(const Table& a, const Table& b) {
    if (!(a.schema.columns == b.schema.columns) || a.schema.label != b.schema.label) {
        throw Error(ErrorKind::data, "cannot concatenate tables with different schemas");
    }
    Table out = a;
    out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
    out.schema.classCount = out.schema.label && out.schema.label->task == Task::classification
                                ? std::optional<std::size_t>(out.class_values().size())
                                : std::nullopt;
    return out;
}

AugmentedFit train_with_augmentation(const Predictor& prototype, const Table& synth, const Table& original,
                                     int upweight) {
    if (original.rows.empty()) {
        throw Error(ErrorKind::usage, "augmented training needs original rows");
    }
    if (upweight < 1) {
        throw Error(ErrorKind::config, "upweight must be at least 1");
    }
    AugmentedFit fit;
    fit.predictor = prototype.fresh();
    Table combined = synth.rows.empty() ? original.with_rows({}) : synth;
    if (!synth.rows.empty() &&
        (!(synth.schema.columns == original.schema.columns) || synth.schema.label != original.schema.label)) {
        throw Error(ErrorKind::data, "synthetic and original tables have different schemas");
    }
    const int repeats = prototype.uses_upweight() ? upweight : 1;
    for (int r = 0; r < repeats; ++r) {
        combined.rows.insert(combined.rows.end(), original.rows.begin(), original.rows.end());
    }
    combined.schema.classCount = original.schema.classCount;
    fit.predictor->fit(combined);
    fit.semantics = prototype.uses_upweight() ? "concatenation, original rows x" + std::to_string(upweight)
                                              : "concatenation (memory-based)";
    return fit;
}

}  // namespace tabsynth
