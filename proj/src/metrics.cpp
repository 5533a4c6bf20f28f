#include "tabsynth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tabsynth/error.hpp"

namespace tabsynth {

namespace {

// Average 1-based ranks of values, ascending.
std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = r;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

std::string_view to_string(MetricKind kind) noexcept {
    switch (kind) {
        case MetricKind::accuracy:
            return "accuracy";
        case MetricKind::r2:
            return "r2";
        case MetricKind::auc:
            return "auc";
        case MetricKind::coverage:
            return "coverage";
        case MetricKind::avgRank:
            return "avg_rank";
    }
    return "?";
}

MetricValue accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& truth) {
    if (predictions.size() != truth.size()) {
        throw Error(ErrorKind::data, "accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                                         std::to_string(truth.size()) + " labels");
    }
    if (truth.empty()) {
        throw Error(ErrorKind::data, "accuracy needs at least one row");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        hits += predictions[i] == truth[i] ? 1 : 0;
    }
    return {MetricKind::accuracy, static_cast<double>(hits) / static_cast<double>(truth.size()), truth.size()};
}

MetricValue r2(const std::vector<double>& predictions, const std::vector<double>& truth) {
    if (predictions.size() != truth.size()) {
        throw Error(ErrorKind::data, "r2: prediction and truth lengths differ");
    }
    if (truth.size() < 2) {
        throw Error(ErrorKind::data, "r2 needs at least two rows");
    }
    const double mean = mean_of(truth);
    double ssRes = 0.0;
    double ssTot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ssRes += (truth[i] - predictions[i]) * (truth[i] - predictions[i]);
        ssTot += (truth[i] - mean) * (truth[i] - mean);
    }
    if (!(ssTot > 0.0)) {
        throw Error(ErrorKind::data, "r2 is undefined for constant truth");
    }
    return {MetricKind::r2, 1.0 - ssRes / ssTot, truth.size()};
}

MetricValue auc(const std::vector<double>& scores, const std::vector<int>& truth) {
    if (scores.size() != truth.size()) {
        throw Error(ErrorKind::data, "auc: score and truth lengths differ");
    }
    std::size_t pos = 0;
    for (int t : truth) {
        if (t != 0 && t != 1) {
            throw Error(ErrorKind::data, "auc truth must be 0 or 1");
        }
        pos += static_cast<std::size_t>(t);
    }
    const std::size_t neg = truth.size() - pos;
    if (pos == 0 || neg == 0) {
        throw Error(ErrorKind::data, "auc needs both classes in the truth");
    }
    const auto ranks = average_ranks(scores);
    double rankSum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 1) {
            rankSum += ranks[i];
        }
    }
    const double np = static_cast<double>(pos);
    const double nn = static_cast<double>(neg);
    return {MetricKind::auc, (rankSum - np * (np + 1.0) / 2.0) / (np * nn), truth.size()};
}

RowDistance::RowDistance(const Table& reference, bool scaled) : columns_(reference.schema.columns) {
    scale_.assign(columns_.size(), 1.0);
    if (!scaled) {
        return;
    }
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (columns_[j].kind != ColumnKind::numerical) {
            continue;
        }
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& row : reference.rows) {
            if (!row.cells[j].is_missing()) {
                lo = std::min(lo, row.cells[j].value());
                hi = std::max(hi, row.cells[j].value());
            }
        }
        if (hi > lo) {
            scale_[j] = hi - lo;
        }
    }
}

void RowDistance::check(const Schema& schema) const {
    if (schema.columns.size() != columns_.size()) {
        throw Error(ErrorKind::data, "tables have " + std::to_string(schema.columns.size()) + " and " +
                                         std::to_string(columns_.size()) + " feature columns");
    }
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (!(schema.columns[j] == columns_[j])) {
            throw Error(ErrorKind::data, "column '" + schema.columns[j].name + "' does not match '" +
                                             columns_[j].name + "'");
        }
    }
}

double RowDistance::operator()(const Row& a, const Row& b) const {
    double d = 0.0;
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        const Cell& x = a.cells[j];
        const Cell& y = b.cells[j];
        if (x.is_missing() || y.is_missing()) {
            d += (x.is_missing() && y.is_missing()) ? 0.0 : 1.0;
        } else if (columns_[j].kind == ColumnKind::numerical) {
            d += std::abs(x.value() - y.value()) / scale_[j];
        } else {
            d += x.text() == y.text() ? 0.0 : 1.0;
        }
    }
    return d;
}

std::vector<double> dcr_distribution(const Table& synth, const Table& train, bool scaled) {
    if (train.rows.empty()) {
        throw Error(ErrorKind::data, "DCR needs a non-empty training table");
    }
    const RowDistance dist(train, scaled);
    dist.check(synth.schema);
    std::vector<double> out;
    out.reserve(synth.rows.size());
    for (const auto& s : synth.rows) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : train.rows) {
            best = std::min(best, dist(s, t));
        }
        out.push_back(best);
    }
    return out;
}

MetricValue coverage(const Table& real, const Table& synth, std::size_t k, bool scaled) {
    if (real.rows.empty() || synth.rows.empty()) {
        throw Error(ErrorKind::data, "coverage needs non-empty real and synthetic tables");
    }
    if (k < 1 || k >= real.rows.size()) {
        throw Error(ErrorKind::usage, "coverage k = " + std::to_string(k) + " must be in [1, " +
                                          std::to_string(real.rows.size() - 1) + "]");
    }
    const RowDistance dist(real, scaled);
    dist.check(synth.schema);
    std::size_t covered = 0;
    std::vector<double> others;
    for (std::size_t i = 0; i < real.rows.size(); ++i) {
        others.clear();
        for (std::size_t j = 0; j < real.rows.size(); ++j) {
            if (j != i) {
                others.push_back(dist(real.rows[i], real.rows[j]));
            }
        }
        std::nth_element(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k - 1), others.end());
        const double radius = others[k - 1];
        for (const auto& s : synth.rows) {
            if (dist(real.rows[i], s) <= radius) {
                ++covered;
                break;
            }
        }
    }
    return {MetricKind::coverage, static_cast<double>(covered) / static_cast<double>(real.rows.size()),
            real.rows.size()};
}

std::vector<RankSummary> average_rank(const std::vector<std::vector<double>>& matrix, bool higherIsBetter) {
    if (matrix.size() < 2) {
        throw Error(ErrorKind::data, "average rank needs at least two methods");
    }
    const std::size_t datasets = matrix.front().size();
    if (datasets == 0) {
        throw Error(ErrorKind::data, "average rank needs at least one dataset");
    }
    for (const auto& row : matrix) {
        if (row.size() != datasets) {
            throw Error(ErrorKind::data, "metric matrix has missing entries");
        }
        for (double v : row) {
            if (std::isnan(v)) {
                throw Error(ErrorKind::data, "metric matrix has missing entries");
            }
        }
    }
    std::vector<std::vector<double>> ranks(matrix.size());
    for (std::size_t d = 0; d < datasets; ++d) {
        std::vector<double> column;
        for (const auto& row : matrix) {
            column.push_back(higherIsBetter ? -row[d] : row[d]);
        }
        const auto r = average_ranks(column);
        for (std::size_t m = 0; m < matrix.size(); ++m) {
            ranks[m].push_back(r[m]);
        }
    }
    std::vector<RankSummary> out;
    for (const auto& r : ranks) {
        out.push_back({mean_of(r), sample_std(r)});
    }
    return out;
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

double sample_std(const std::vector<double>& values) {
    if (values.size() < 2) {
        return 0.0;
    }
    const double m = mean_of(values);
    double ss = 0.0;
    for (double v : values) {
        ss += (v - m) * (v - m);
    }
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

MetricValue evaluate(const Predictor& predictor, const Table& test) {
    if (!test.schema.label) {
        throw Error(ErrorKind::data, "evaluation needs a labeled test table");
    }
    if (predictor.task() == Task::classification) {
        std::vector<std::string> pred, truth;
        for (const auto& c : predictor.predict(test)) {
            pred.push_back(c.text());
        }
        for (const auto& row : test.rows) {
            truth.push_back(row.label->text());
        }
        return accuracy(pred, truth);
    }
    std::vector<double> truth;
    for (const auto& row : test.rows) {
        truth.push_back(row.label->value());
    }
    return r2(predictor.predict_values(test), truth);
}

MetricValue evaluate_auc(const Predictor& predictor, const Table& test, const std::string& positiveClass) {
    const auto& classes = predictor.classes();
    auto it = std::find(classes.begin(), classes.end(), positiveClass);
    if (it == classes.end()) {
        throw Error(ErrorKind::data, "positive class '" + positiveClass + "' was not seen in training");
    }
    const auto column = static_cast<std::size_t>(it - classes.begin());
    std::vector<double> scores;
    for (const auto& s : predictor.predict_scores(test)) {
        scores.push_back(s[column]);
    }
    std::vector<int> truth;
    for (const auto& row : test.rows) {
        truth.push_back(row.label->text() == positiveClass ? 1 : 0);
    }
    return auc(scores, truth);
}

}  // namespace tabsynth
