#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tabsynth/backbone.hpp"
#include "tabsynth/table.hpp"

namespace tabsynth {

enum class MetricKind { accuracy, r2, auc, coverage, avgRank };

std::string_view to_string(MetricKind kind) noexcept;

struct MetricValue {
    MetricKind kind = MetricKind::accuracy;
    double value = 0.0;
    std::size_t support = 0;
};

MetricValue accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& truth);

/// 1 - SSres / SStot. Throws data error on constant truth or fewer than two rows.
MetricValue r2(const std::vector<double>& predictions, const std::vector<double>& truth);

/// Mann-Whitney form: average ranks (ties share the mean rank), then
/// (R+ - n+(n+ + 1)/2) / (n+ n-). truth holds 0/1.
MetricValue auc(const std::vector<double>& scores, const std::vector<int>& truth);

/// Sum over feature columns of |a - b| / range (numerical; range from the
/// reference table, 1 when unscaled or constant) and 0/1 mismatch
/// (categorical). Two missing cells are equal; one missing cell costs 1.
class RowDistance {
public:
    RowDistance(const Table& reference, bool scaled = true);

    double operator()(const Row& a, const Row& b) const;

    /// Throws data error when the feature columns differ from the reference.
    void check(const Schema& schema) const;

private:
    std::vector<Column> columns_;
    std::vector<double> scale_;
};

/// For each synthetic row, the distance to its closest training row.
std::vector<double> dcr_distribution(const Table& synth, const Table& train, bool scaled = true);

/// Fraction of real rows whose ball (radius = distance to the k-th nearest
/// other real row, inclusive) contains a synthetic row.
MetricValue coverage(const Table& real, const Table& synth, std::size_t k = 5, bool scaled = true);

struct RankSummary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation across datasets
};

/// matrix[method][dataset]. Rank 1 is best; ties share the average rank.
std::vector<RankSummary> average_rank(const std::vector<std::vector<double>>& matrix, bool higherIsBetter = true);

double mean_of(const std::vector<double>& values);
/// Sample standard deviation (n - 1); 0 for a single value.
double sample_std(const std::vector<double>& values);

/// Accuracy (classification) or R2 (regression) of a fitted predictor.
MetricValue evaluate(const Predictor& predictor, const Table& test);

/// AUC of the score for `positiveClass` on a binary test table.
MetricValue evaluate_auc(const Predictor& predictor, const Table& test, const std::string& positiveClass);

}  // namespace tabsynth
