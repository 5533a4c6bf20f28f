#include "tabsynth/table.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "tabsynth/error.hpp"
#include "tabsynth/random.hpp"

namespace tabsynth {

namespace {

[[noreturn]] void data_error(const std::string& message) {
    throw Error(ErrorKind::data, message);
}

struct CsvRecord {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

std::vector<CsvRecord> read_records(std::string_view text, const std::string& sourceId) {
    std::vector<CsvRecord> records;
    std::size_t pos = 0;
    std::size_t line = 1;
    const std::size_t n = text.size();
    while (pos < n) {
        CsvRecord record;
        record.line = line;
        std::string field;
        bool done = false;
        while (!done) {
            field.clear();
            if (pos < n && text[pos] == '"') {
                ++pos;
                bool closed = false;
                while (pos < n) {
                    char c = text[pos];
                    if (c == '"') {
                        if (pos + 1 < n && text[pos + 1] == '"') {
                            field.push_back('"');
                            pos += 2;
                            continue;
                        }
                        ++pos;
                        closed = true;
                        break;
                    }
                    if (c == '\n') {
                        ++line;
                    }
                    field.push_back(c);
                    ++pos;
                }
                if (!closed) {
                    data_error(sourceId + ": line " + std::to_string(record.line) +
                               ": unterminated quoted field");
                }
                if (pos < n && text[pos] != ',' && text[pos] != '\n' && text[pos] != '\r') {
                    data_error(sourceId + ": line " + std::to_string(line) +
                               ": unexpected character after closing quote");
                }
            } else {
                while (pos < n && text[pos] != ',' && text[pos] != '\n' && text[pos] != '\r') {
                    if (text[pos] == '"') {
                        data_error(sourceId + ": line " + std::to_string(line) +
                                   ": stray double quote in unquoted field");
                    }
                    field.push_back(text[pos]);
                    ++pos;
                }
            }
            record.fields.push_back(field);
            if (pos >= n) {
                done = true;
            } else if (text[pos] == ',') {
                ++pos;
            } else {
                if (text[pos] == '\r') {
                    ++pos;
                }
                if (pos < n && text[pos] == '\n') {
                    ++pos;
                }
                ++line;
                done = true;
            }
        }
        // Blank lines carry no record.
        if (!(record.fields.size() == 1 && record.fields[0].empty())) {
            records.push_back(std::move(record));
        }
    }
    return records;
}

bool needs_quoting(std::string_view field) {
    return field.find_first_of(",\"\n\r") != std::string_view::npos;
}

void append_field(std::string& out, std::string_view field) {
    if (!needs_quoting(field)) {
        out.append(field);
        return;
    }
    out.push_back('"');
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
}

}  // namespace

std::string_view to_string(ColumnKind kind) noexcept {
    return kind == ColumnKind::numerical ? "numerical" : "categorical";
}

std::string_view to_string(Task task) noexcept {
    return task == Task::classification ? "classification" : "regression";
}

Task parse_task(std::string_view text) {
    if (text == "classification") {
        return Task::classification;
    }
    if (text == "regression") {
        return Task::regression;
    }
    throw Error(ErrorKind::config, "unknown task '" + std::string(text) + "'");
}

std::string_view to_string(Mechanism mechanism) noexcept {
    return mechanism == Mechanism::mcar ? "mcar" : "mar";
}

Mechanism parse_mechanism(std::string_view text) {
    if (text == "mcar" || text == "MCAR") {
        return Mechanism::mcar;
    }
    if (text == "mar" || text == "MAR") {
        return Mechanism::mar;
    }
    throw Error(ErrorKind::config, "unknown missingness mechanism '" + std::string(text) + "'");
}

bool parse_decimal(std::string_view text, double& out) {
    std::size_t i = 0;
    const std::size_t n = text.size();
    if (i < n && (text[i] == '+' || text[i] == '-')) {
        ++i;
    }
    std::size_t digits = 0;
    while (i < n && text[i] >= '0' && text[i] <= '9') {
        ++i;
        ++digits;
    }
    if (i < n && text[i] == '.') {
        ++i;
        while (i < n && text[i] >= '0' && text[i] <= '9') {
            ++i;
            ++digits;
        }
    }
    if (digits == 0) {
        return false;
    }
    if (i < n && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        if (i < n && (text[i] == '+' || text[i] == '-')) {
            ++i;
        }
        std::size_t expDigits = 0;
        while (i < n && text[i] >= '0' && text[i] <= '9') {
            ++i;
            ++expDigits;
        }
        if (expDigits == 0) {
            return false;
        }
    }
    if (i != n) {
        return false;
    }
    // from_chars rejects a leading '+'.
    std::string_view body = text;
    if (!body.empty() && body.front() == '+') {
        body.remove_prefix(1);
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (ec == std::errc::result_out_of_range) {
        return false;
    }
    if (ec != std::errc() || ptr != body.data() + body.size() || !std::isfinite(value)) {
        return false;
    }
    out = value;
    return true;
}

Cell Cell::number(std::string text, double value) {
    Cell c;
    c.kind_ = Kind::number;
    c.text_ = std::move(text);
    c.value_ = value;
    return c;
}

Cell Cell::category(std::string text) {
    Cell c;
    c.kind_ = Kind::category;
    c.text_ = std::move(text);
    return c;
}

std::optional<Cell> Cell::from_text(std::string_view text, ColumnKind kind) {
    if (text.empty()) {
        return Cell::missing();
    }
    if (kind == ColumnKind::categorical) {
        return Cell::category(std::string(text));
    }
    double v = 0.0;
    if (!parse_decimal(text, v)) {
        return std::nullopt;
    }
    return Cell::number(std::string(text), v);
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

ColumnKind Schema::label_kind() const {
    if (!label) {
        throw Error(ErrorKind::data, "schema has no label column");
    }
    return label->task == Task::regression ? ColumnKind::numerical : ColumnKind::categorical;
}

void Schema::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& column : columns) {
        if (column.name.empty()) {
            data_error("empty column name");
        }
        if (!seen.insert(column.name).second) {
            data_error("duplicate column name '" + column.name + "'");
        }
    }
    if (label) {
        if (label->name.empty()) {
            data_error("empty label column name");
        }
        if (!seen.insert(label->name).second) {
            data_error("duplicate column name '" + label->name + "'");
        }
        if (label->task == Task::classification && classCount && *classCount < 2) {
            data_error("classification label '" + label->name + "' needs at least two classes");
        }
    }
}

Schema Schema::without_label() const {
    Schema s;
    s.columns = columns;
    return s;
}

void Table::validate() const {
    schema.validate();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& row = rows[i];
        if (row.cells.size() != schema.columns.size()) {
            data_error(sourceId + ": row " + std::to_string(i) + " has " +
                       std::to_string(row.cells.size()) + " cells, schema has " +
                       std::to_string(schema.columns.size()));
        }
        if (schema.label.has_value() != row.label.has_value()) {
            data_error(sourceId + ": row " + std::to_string(i) + " label presence does not match schema");
        }
        if (row.label && row.label->is_missing()) {
            data_error(sourceId + ": row " + std::to_string(i) + " has a missing label");
        }
    }
}

std::vector<std::string> Table::class_values() const {
    std::set<std::string> values;
    for (const auto& row : rows) {
        if (row.label && !row.label->is_missing()) {
            values.insert(row.label->text());
        }
    }
    return {values.begin(), values.end()};
}

Table Table::with_rows(std::vector<Row> newRows) const {
    Table t;
    t.schema = schema;
    t.rows = std::move(newRows);
    t.sourceId = sourceId;
    return t;
}

Table parse_csv(std::string_view text, std::string sourceId, const LoadOptions& options) {
    auto records = read_records(text, sourceId);
    if (records.empty()) {
        data_error(sourceId + ": missing header line");
    }
    const auto& header = records.front().fields;
    {
        std::unordered_set<std::string> names;
        for (const auto& name : header) {
            if (name.empty()) {
                data_error(sourceId + ": line 1: empty column name");
            }
            if (!names.insert(name).second) {
                data_error(sourceId + ": line 1: duplicate column name '" + name + "'");
            }
        }
    }
    if (records.size() < 2) {
        data_error(sourceId + ": no data rows");
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].fields.size() != header.size()) {
            data_error(sourceId + ": line " + std::to_string(records[r].line) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(records[r].fields.size()));
        }
    }

    std::optional<std::string> labelName = options.labelColumn;
    Task task = options.task;
    if (options.schemaHint && options.schemaHint->label) {
        labelName = options.schemaHint->label->name;
        task = options.schemaHint->label->task;
    }
    std::optional<std::size_t> labelIndex;
    if (labelName) {
        auto it = std::find(header.begin(), header.end(), *labelName);
        if (it == header.end()) {
            data_error(sourceId + ": label column '" + *labelName + "' not in header");
        }
        labelIndex = static_cast<std::size_t>(it - header.begin());
    }

    Schema schema;
    std::vector<std::size_t> featureFields;
    for (std::size_t f = 0; f < header.size(); ++f) {
        if (labelIndex && f == *labelIndex) {
            continue;
        }
        featureFields.push_back(f);
        ColumnKind kind = ColumnKind::numerical;
        if (options.schemaHint) {
            auto idx = options.schemaHint->find(header[f]);
            if (!idx) {
                data_error(sourceId + ": column '" + header[f] + "' not in schema hint");
            }
            kind = options.schemaHint->columns[*idx].kind;
        } else {
            double scratch = 0.0;
            for (std::size_t r = 1; r < records.size(); ++r) {
                const auto& field = records[r].fields[f];
                if (!field.empty() && !parse_decimal(field, scratch)) {
                    kind = ColumnKind::categorical;
                    break;
                }
            }
        }
        schema.columns.push_back({header[f], kind});
    }
    if (options.schemaHint && options.schemaHint->columns.size() != schema.columns.size()) {
        data_error(sourceId + ": header does not match schema hint");
    }
    if (labelIndex) {
        schema.label = LabelSpec{*labelName, task};
        schema.labelPosition = *labelIndex;
    }

    Table table;
    table.sourceId = std::move(sourceId);
    table.rows.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        Row row;
        row.cells.reserve(featureFields.size());
        for (std::size_t c = 0; c < featureFields.size(); ++c) {
            auto cell = Cell::from_text(rec.fields[featureFields[c]], schema.columns[c].kind);
            if (!cell) {
                data_error(table.sourceId + ": line " + std::to_string(rec.line) + ": column '" +
                           schema.columns[c].name + "' expects a number, found '" +
                           rec.fields[featureFields[c]] + "'");
            }
            row.cells.push_back(std::move(*cell));
        }
        if (labelIndex) {
            const auto& text = rec.fields[*labelIndex];
            if (text.empty()) {
                data_error(table.sourceId + ": line " + std::to_string(rec.line) + ": missing label");
            }
            auto cell = Cell::from_text(text, schema.label_kind());
            if (!cell) {
                data_error(table.sourceId + ": line " + std::to_string(rec.line) +
                           ": regression label is not a number: '" + text + "'");
            }
            row.label = std::move(*cell);
        }
        table.rows.push_back(std::move(row));
    }
    table.schema = std::move(schema);
    if (table.schema.label && table.schema.label->task == Task::classification) {
        table.schema.classCount = table.class_values().size();
    }
    table.schema.validate();
    return table;
}

Table load_csv(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), path.string(), options);
}

std::string to_csv(const Table& table) {
    const Schema& schema = table.schema;
    const std::size_t width = schema.columns.size() + (schema.label ? 1 : 0);
    std::string out;
    auto write_line = [&](auto&& feature_text, auto&& label_text) {
        std::size_t feature = 0;
        for (std::size_t f = 0; f < width; ++f) {
            if (f > 0) {
                out.push_back(',');
            }
            if (schema.label && f == std::min(schema.labelPosition, width - 1)) {
                append_field(out, label_text());
            } else {
                append_field(out, feature_text(feature++));
            }
        }
        out.push_back('\n');
    };
    write_line([&](std::size_t c) -> std::string_view { return schema.columns[c].name; },
               [&]() -> std::string_view { return schema.label->name; });
    for (const auto& row : table.rows) {
        write_line([&](std::size_t c) -> std::string_view { return row.cells[c].text(); },
                   [&]() -> std::string_view {
                       return row.label ? std::string_view(row.label->text()) : std::string_view();
                   });
    }
    return out;
}

void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorKind::io, "cannot write '" + tmp.string() + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw Error(ErrorKind::io, "write failed for '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::io, "cannot rename into '" + path.string() + "'");
    }
}

void write_csv(const Table& table, const std::filesystem::path& path) {
    write_text_atomic(path, to_csv(table));
}

std::pair<Table, Table> split(const Table& table, double trainFraction, std::uint64_t seed) {
    if (!(trainFraction > 0.0 && trainFraction < 1.0)) {
        data_error("train fraction must be in (0, 1)");
    }
    if (table.size() < 2) {
        data_error("split needs at least two rows");
    }
    const std::size_t n = table.size();
    const auto trainCount = static_cast<std::size_t>(std::llround(static_cast<double>(n) * trainFraction));
    if (trainCount == 0 || trainCount >= n) {
        data_error("split of " + std::to_string(n) + " rows at fraction " + std::to_string(trainFraction) +
                   " leaves an empty part");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    std::vector<Row> train;
    std::vector<Row> test;
    train.reserve(trainCount);
    test.reserve(n - trainCount);
    for (std::size_t i = 0; i < n; ++i) {
        (i < trainCount ? train : test).push_back(table.rows[order[i]]);
    }
    return {table.with_rows(std::move(train)), table.with_rows(std::move(test))};
}

std::size_t count_missing_features(const Table& table) {
    std::size_t count = 0;
    for (const auto& row : table.rows) {
        for (const auto& cell : row.cells) {
            count += cell.is_missing() ? 1 : 0;
        }
    }
    return count;
}

namespace {

std::optional<std::size_t> resolve_anchor(const Table& table, const MissingnessSpec& spec) {
    if (spec.mechanism != Mechanism::mar) {
        return std::nullopt;
    }
    if (!spec.anchorColumn) {
        data_error("MAR missingness needs an anchor column");
    }
    auto idx = table.schema.find(*spec.anchorColumn);
    if (!idx) {
        data_error("MAR anchor column '" + *spec.anchorColumn + "' not found");
    }
    if (table.schema.columns[*idx].kind != ColumnKind::numerical) {
        data_error("MAR anchor column '" + *spec.anchorColumn + "' must be numerical");
    }
    return idx;
}

}  // namespace

std::size_t maskable_cell_count(const Table& table, const MissingnessSpec& spec) {
    const std::size_t m = table.schema.columns.size();
    const std::size_t perRow = spec.mechanism == Mechanism::mar && m > 0 ? m - 1 : m;
    return perRow * table.size();
}

Table apply_missingness(const Table& table, const MissingnessSpec& spec) {
    if (!(spec.missRatio > 0.0 && spec.missRatio < 1.0)) {
        data_error("miss ratio must be strictly between 0 and 1");
    }
    const auto anchor = resolve_anchor(table, spec);
    if (count_missing_features(table) != 0) {
        data_error("apply_missingness expects fully observed feature cells");
    }

    const std::size_t n = table.size();
    std::vector<double> rowProbability(n, spec.missRatio);
    if (anchor) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return table.rows[a].cells[*anchor].value() < table.rows[b].cells[*anchor].value();
        });
        for (std::size_t rank = 0; rank < n; ++rank) {
            const double percentile = (static_cast<double>(rank) + 0.5) / static_cast<double>(n);
            rowProbability[order[rank]] = std::clamp(2.0 * spec.missRatio * percentile, 0.0, 1.0);
        }
    }

    Rng rng(spec.seed);
    Table out = table;
    for (std::size_t r = 0; r < n; ++r) {
        auto& cells = out.rows[r].cells;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (anchor && c == *anchor) {
                continue;
            }
            if (rng.bernoulli(rowProbability[r])) {
                cells[c] = Cell::missing();
            }
        }
    }
    return out;
}

ClassBalance class_balance(const Table& table) {
    if (!table.schema.label || table.schema.label->task != Task::classification) {
        data_error("class balance needs a classification label");
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& row : table.rows) {
        ++counts[row.label->text()];
    }
    if (counts.size() != 2) {
        data_error("expected a binary label, found " + std::to_string(counts.size()) + " classes");
    }
    auto first = counts.begin();
    auto second = std::next(first);
    ClassBalance b;
    if (first->second > second->second) {
        b = {first->first, second->first, first->second, second->second};
    } else {
        b = {second->first, first->first, second->second, first->second};
        if (first->second == second->second) {
            b = {first->first, second->first, first->second, second->second};
        }
    }
    return b;
}

Table downsample_minority(const Table& table, std::size_t ratio, std::uint64_t seed) {
    if (ratio == 0) {
        data_error("imbalance ratio must be positive");
    }
    const ClassBalance balance = class_balance(table);
    const std::size_t target = balance.majorityCount / ratio;
    if (target == 0) {
        data_error("ratio " + std::to_string(ratio) + " leaves no minority rows (majority " +
                   std::to_string(balance.majorityCount) + ")");
    }
    if (target > balance.minorityCount) {
        data_error("minority class has " + std::to_string(balance.minorityCount) + " rows, ratio needs " +
                   std::to_string(target));
    }
    std::vector<std::size_t> minorityRows;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (table.rows[i].label->text() == balance.minority) {
            minorityRows.push_back(i);
        }
    }
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(minorityRows));
    std::vector<bool> keep(table.size(), true);
    for (std::size_t i = target; i < minorityRows.size(); ++i) {
        keep[minorityRows[i]] = false;
    }
    std::vector<Row> rows;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (keep[i]) {
            rows.push_back(table.rows[i]);
        }
    }
    return table.with_rows(std::move(rows));
}

namespace {

bool meaningless_name(std::string_view name) {
    if (name.size() == 1) {
        return true;
    }
    std::size_t i = 0;
    while (i < name.size() && std::isalpha(static_cast<unsigned char>(name[i]))) {
        ++i;
    }
    if (i == 0 || i == name.size()) {
        return false;
    }
    for (std::size_t j = i; j < name.size(); ++j) {
        if (!std::isdigit(static_cast<unsigned char>(name[j]))) {
            return false;
        }
    }
    return true;
}

}  // namespace

bool has_meaningless_names(const Schema& schema) {
    std::size_t total = 0;
    std::size_t bad = 0;
    for (const auto& c : schema.columns) {
        ++total;
        bad += meaningless_name(c.name) ? 1 : 0;
    }
    if (schema.label) {
        ++total;
        bad += meaningless_name(schema.label->name) ? 1 : 0;
    }
    return total > 0 && 2 * bad >= total;
}

}  // namespace tabsynth
