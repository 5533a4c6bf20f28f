#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tabsynth/table.hpp"

namespace tabsynth {

/// Numeric view of feature cells fitted on a training table: numerical cells
/// keep their value, categorical cells become the index of their category in
/// the sorted training categories (-1 when unseen). Missing cells take the
/// training median/mode first.
class FeatureEncoder {
public:
    FeatureEncoder() = default;
    explicit FeatureEncoder(const Table& train);

    std::vector<double> encode(const Row& row) const;
    std::vector<std::vector<double>> encode(const Table& table) const;

    const std::vector<Column>& columns() const noexcept { return columns_; }
    bool is_categorical(std::size_t j) const { return columns_[j].kind == ColumnKind::categorical; }
    /// max - min of a numerical column over the training table (0 if constant).
    double range(std::size_t j) const { return ranges_[j]; }

    /// Throws data error naming the first column that differs from training.
    void check_schema(const Schema& schema) const;

private:
    std::vector<Column> columns_;
    std::vector<Cell> fill_;
    std::vector<std::vector<std::string>> categories_;
    std::vector<double> ranges_;
};

/// The model F: fitted on a labeled table, predicts label cells.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual std::string_view kind() const noexcept = 0;

    /// Throws data error on fewer than two rows, a missing label, or a
    /// single-class classification table.
    virtual void fit(const Table& train) = 0;

    virtual std::vector<Cell> predict(const Table& features) const;

    /// Per-row class probabilities aligned with classes(); classification only.
    virtual std::vector<std::vector<double>> predict_scores(const Table& features) const = 0;

    /// Regression predictions; regression only.
    virtual std::vector<double> predict_values(const Table& features) const = 0;

    /// Unfitted copy with the same hyperparameters.
    virtual std::unique_ptr<Predictor> fresh() const = 0;

    /// Whether two-phase training degrades to concatenation with upweighted
    /// original rows (true) or plain concatenation (false).
    virtual bool uses_upweight() const noexcept { return true; }

    const Schema& schema() const noexcept { return schema_; }
    Task task() const { return schema_.label->task; }
    const std::vector<std::string>& classes() const noexcept { return classes_; }
    bool fitted() const noexcept { return fitted_; }

protected:
    /// Shared checks and bookkeeping; returns the label targets (class index
    /// or value) per row.
    std::vector<double> begin_fit(const Table& train);
    void require_fitted() const;

    Schema schema_;
    std::vector<std::string> classes_;
    bool fitted_ = false;
};

struct CartConfig {
    int maxDepth = 8;
    int minLeaf = 5;
};

/// CART with Gini (classification) or squared-error (regression) splits.
/// Numerical splits are x <= midpoint, categorical splits are x == category.
/// Training rows are canonically sorted first, so the tree does not depend
/// on row order; ties go to the lower feature index, then the lower
/// threshold. Zero-gain splits are allowed while a node is impure.
class CartTree final : public Predictor {
public:
    explicit CartTree(CartConfig config = {});

    std::string_view kind() const noexcept override { return "cart"; }
    void fit(const Table& train) override;
    std::vector<std::vector<double>> predict_scores(const Table& features) const override;
    std::vector<double> predict_values(const Table& features) const override;
    std::unique_ptr<Predictor> fresh() const override { return std::make_unique<CartTree>(config_); }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    int depth() const noexcept;

private:
    struct Node {
        int feature = -1;  // -1 for leaves
        bool categorical = false;
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        std::vector<double> distribution;  // class probabilities (classification)
        double value = 0.0;                // mean (regression)
        int level = 0;
    };

    int build(const std::vector<std::vector<double>>& x, const std::vector<double>& y, std::vector<std::size_t> idx,
              int level);
    const Node& leaf_for(const std::vector<double>& x) const;

    CartConfig config_;
    FeatureEncoder encoder_;
    std::vector<Node> nodes_;
};

struct KnnConfig {
    int k = 5;
};

/// k nearest neighbours under L1 distance on min-max scaled numerical
/// features plus 0/1 categorical mismatch. Distance ties go to the earlier
/// training row.
class KnnPredictor final : public Predictor {
public:
    explicit KnnPredictor(KnnConfig config = {});

    std::string_view kind() const noexcept override { return "knn"; }
    void fit(const Table& train) override;
    std::vector<std::vector<double>> predict_scores(const Table& features) const override;
    std::vector<double> predict_values(const Table& features) const override;
    std::unique_ptr<Predictor> fresh() const override { return std::make_unique<KnnPredictor>(config_); }
    bool uses_upweight() const noexcept override { return false; }

private:
    std::vector<std::size_t> neighbours(const std::vector<double>& x) const;

    KnnConfig config_;
    FeatureEncoder encoder_;
    std::vector<std::vector<double>> x_;
    std::vector<double> y_;
};

/// External backbone driven over CSV files:
///   <cmd> train <trainCsv> <modelPath>
///   <cmd> predict <modelPath> <featuresCsv> <outCsv>
/// outCsv has a header; its first column is the label, and any further
/// columns are per-class scores in sorted class order.
class PluginPredictor final : public Predictor {
public:
    explicit PluginPredictor(std::string command);
    ~PluginPredictor() override;
    PluginPredictor(const PluginPredictor&) = delete;
    PluginPredictor& operator=(const PluginPredictor&) = delete;

    std::string_view kind() const noexcept override { return "plugin"; }
    void fit(const Table& train) override;
    std::vector<Cell> predict(const Table& features) const override;
    std::vector<std::vector<double>> predict_scores(const Table& features) const override;
    std::vector<double> predict_values(const Table& features) const override;
    std::unique_ptr<Predictor> fresh() const override { return std::make_unique<PluginPredictor>(command_); }

private:
    Table run_predict(const Table& features) const;

    std::string command_;
    std::filesystem::path workDir_;
};

/// "cart", "knn" or "plugin:<command>".
std::unique_ptr<Predictor> make_predictor(std::string_view spec, CartConfig cart = {}, KnnConfig knn = {});

/// Synthetic features plus F's predicted label: D_s = {(x', F(x'))}.
Table label_synthetic(const Predictor& predictor, const Table& synthFeatures);

struct AugmentedFit {
    std::unique_ptr<Predictor> predictor;
    std::string semantics;
};

/// Synthetic-then-original training. Built-in predictors are not incremental,
/// so this fits on synthetic rows followed by the original rows repeated
/// `upweight` times (CART) or on the plain concatenation (kNN).
AugmentedFit train_with_augmentation(const Predictor& prototype, const Table& synth, const Table& original,
                                     int upweight = 1);

/// Joins labeled tables with identical schemas.
Table concatenate(const Table& a, const Table& b);

}  // namespace tabsynth
