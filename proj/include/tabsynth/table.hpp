#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tabsynth {

enum class ColumnKind { numerical, categorical };
enum class Task { classification, regression };

std::string_view to_string(ColumnKind kind) noexcept;
std::string_view to_string(Task task) noexcept;
Task parse_task(std::string_view text);

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::categorical;

    bool operator==(const Column&) const = default;
};

struct LabelSpec {
    std::string name;
    Task task = Task::classification;

    bool operator==(const LabelSpec&) const = default;
};

struct Schema {
    std::vector<Column> columns;  // features only, in file order
    std::optional<LabelSpec> label;
    std::optional<std::size_t> classCount;
    // Position of the label among the CSV header fields; only meaningful when
    // label is set. Keeps write_csv faithful to the input column order.
    std::size_t labelPosition = 0;

    std::size_t size() const noexcept { return columns.size(); }
    std::optional<std::size_t> find(std::string_view name) const;
    bool is_label(std::string_view name) const { return label && label->name == name; }

    /// Column kind of the label: categorical for classification, numerical for regression.
    ColumnKind label_kind() const;

    /// Throws data error when column names are empty or duplicated, or a
    /// classification label has fewer than two classes.
    void validate() const;

    Schema without_label() const;
};

/// One table cell. Numbers keep the exact text they were read from so that
/// re-rendering never introduces float formatting drift.
class Cell {
public:
    enum class Kind { missing, number, category };

    Cell() = default;

    static Cell missing() { return Cell{}; }
    static Cell number(std::string text, double value);
    static Cell category(std::string text);

    /// Builds a cell of the given column kind from text. Empty text gives a
    /// missing cell; numerical text that does not parse returns nullopt.
    static std::optional<Cell> from_text(std::string_view text, ColumnKind kind);

    Kind kind() const noexcept { return kind_; }
    bool is_missing() const noexcept { return kind_ == Kind::missing; }
    const std::string& text() const noexcept { return text_; }
    double value() const noexcept { return value_; }

    bool operator==(const Cell& other) const noexcept {
        return kind_ == other.kind_ && text_ == other.text_;
    }

private:
    Kind kind_ = Kind::missing;
    std::string text_;
    double value_ = 0.0;
};

struct Row {
    std::vector<Cell> cells;
    std::optional<Cell> label;

    bool operator==(const Row&) const = default;
};

struct Table {
    Schema schema;
    std::vector<Row> rows;
    std::string sourceId;

    std::size_t size() const noexcept { return rows.size(); }
    bool empty() const noexcept { return rows.empty(); }

    /// Row width and label presence invariants; throws data error.
    void validate() const;

    /// Sorted distinct label texts.
    std::vector<std::string> class_values() const;

    Table with_rows(std::vector<Row> newRows) const;
};

/// Decimal number rule used for schema inference: optional sign, digits with
/// an optional fractional part, optional exponent. No inf/nan, no spaces.
bool parse_decimal(std::string_view text, double& out);

struct LoadOptions {
    std::optional<std::string> labelColumn;
    Task task = Task::classification;
    std::optional<Schema> schemaHint;
};

Table parse_csv(std::string_view text, std::string sourceId, const LoadOptions& options = {});
Table load_csv(const std::filesystem::path& path, const LoadOptions& options = {});

/// Canonical CSV: header, '\n' line endings, minimal double-quote escaping,
/// missing cells as empty fields.
std::string to_csv(const Table& table);

/// Writes to a temporary sibling file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);
void write_csv(const Table& table, const std::filesystem::path& path);

std::pair<Table, Table> split(const Table& table, double trainFraction, std::uint64_t seed);

enum class Mechanism { mcar, mar };
Mechanism parse_mechanism(std::string_view text);
std::string_view to_string(Mechanism mechanism) noexcept;

struct MissingnessSpec {
    Mechanism mechanism = Mechanism::mcar;
    double missRatio = 0.3;
    std::optional<std::string> anchorColumn;  // MAR only
    std::uint64_t seed = 0;
};

/// MCAR masks each feature cell independently with probability missRatio.
/// MAR ranks rows by a numerical anchor column and masks the other feature
/// cells of a row with probability min(1, 2 * missRatio * percentile), where
/// percentile = (rank + 0.5) / n. Labels and the anchor are never masked.
Table apply_missingness(const Table& table, const MissingnessSpec& spec);

std::size_t count_missing_features(const Table& table);

/// Number of feature cells the mechanism is allowed to mask (all feature
/// cells for MCAR, all non-anchor feature cells for MAR).
std::size_t maskable_cell_count(const Table& table, const MissingnessSpec& spec);

struct ClassBalance {
    std::string majority;
    std::string minority;
    std::size_t majorityCount = 0;
    std::size_t minorityCount = 0;
};

/// Majority and minority class of a binary classification table. Equal
/// counts make the lexicographically larger label the minority.
ClassBalance class_balance(const Table& table);

/// Keeps every majority row and majorityCount / ratio minority rows chosen
/// under the seed. Row order of the kept rows is preserved.
Table downsample_minority(const Table& table, std::size_t ratio, std::uint64_t seed);

/// Corpus filter for uninformative headers: true when at least half of the
/// column names (label included) are a single character or letters followed
/// by digits, such as "V1".
bool has_meaningless_names(const Schema& schema);

}  // namespace tabsynth
