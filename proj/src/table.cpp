#include "mechdetect/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "mechdetect/error.hpp"

namespace mechdetect {

std::string_view to_string(ColumnKind kind) {
    return kind == ColumnKind::Numeric ? "numeric" : "categorical";
}

Column Column::numeric(std::string name, std::vector<double> values,
                       std::vector<std::uint8_t> valid) {
    Column c;
    c.name_ = std::move(name);
    c.kind_ = ColumnKind::Numeric;
    if (valid.empty()) valid.assign(values.size(), 1);
    c.numbers_ = std::move(values);
    c.valid_ = std::move(valid);
    c.validate();
    return c;
}

Column Column::categorical(std::string name, std::vector<std::string> dictionary,
                           std::vector<std::uint32_t> codes, std::vector<std::uint8_t> valid) {
    Column c;
    c.name_ = std::move(name);
    c.kind_ = ColumnKind::Categorical;
    if (valid.empty()) valid.assign(codes.size(), 1);
    c.dictionary_ = std::move(dictionary);
    c.codes_ = std::move(codes);
    c.valid_ = std::move(valid);
    c.validate();
    return c;
}

Column Column::categorical_from_strings(std::string name,
                                        std::span<const std::optional<std::string>> cells) {
    std::vector<std::string> dictionary;
    std::unordered_map<std::string, std::uint32_t> lookup;
    std::vector<std::uint32_t> codes(cells.size(), 0);
    std::vector<std::uint8_t> valid(cells.size(), 0);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!cells[i]) continue;
        auto [it, inserted] =
            lookup.try_emplace(*cells[i], static_cast<std::uint32_t>(dictionary.size()));
        if (inserted) dictionary.push_back(*cells[i]);
        codes[i] = it->second;
        valid[i] = 1;
    }
    return categorical(std::move(name), std::move(dictionary), std::move(codes), std::move(valid));
}

void Column::validate() const {
    if (name_.empty()) throw InvalidArgument("column name must be non-empty");
    const std::size_t n = valid_.size();
    if (kind_ == ColumnKind::Numeric) {
        if (numbers_.size() != n)
            throw InvalidArgument("column '" + name_ + "': validity length mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            if (valid_[i] > 1) throw InvalidArgument("column '" + name_ + "': bad validity flag");
            if (valid_[i] && !std::isfinite(numbers_[i]))
                throw InvalidArgument("column '" + name_ + "': non-finite numeric cell");
        }
    } else {
        if (codes_.size() != n)
            throw InvalidArgument("column '" + name_ + "': validity length mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            if (valid_[i] > 1) throw InvalidArgument("column '" + name_ + "': bad validity flag");
            if (valid_[i] && codes_[i] >= dictionary_.size())
                throw InvalidArgument("column '" + name_ + "': category code outside dictionary");
        }
    }
}

std::size_t Column::null_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{0}));
}

std::size_t Column::distinct_count() const {
    if (is_categorical()) {
        std::vector<std::uint8_t> seen(dictionary_.size(), 0);
        std::size_t count = 0;
        for (std::size_t i = 0; i < size(); ++i) {
            if (valid_[i] && !seen[codes_[i]]) {
                seen[codes_[i]] = 1;
                ++count;
            }
        }
        return count;
    }
    std::vector<double> present;
    present.reserve(size());
    for (std::size_t i = 0; i < size(); ++i)
        if (valid_[i]) present.push_back(numbers_[i]);
    std::sort(present.begin(), present.end());
    return static_cast<std::size_t>(std::unique(present.begin(), present.end()) - present.begin());
}

Column Column::take(std::span<const std::size_t> rows) const {
    Column c;
    c.name_ = name_;
    c.kind_ = kind_;
    c.dictionary_ = dictionary_;
    c.valid_.reserve(rows.size());
    if (is_numeric()) c.numbers_.reserve(rows.size());
    else c.codes_.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= size()) throw InvalidArgument("row index out of range");
        c.valid_.push_back(valid_[r]);
        if (is_numeric()) c.numbers_.push_back(numbers_[r]);
        else c.codes_.push_back(codes_[r]);
    }
    return c;
}

Column Column::with_erased(std::span<const std::uint8_t> erase) const {
    if (erase.size() != size()) throw InvalidArgument("erase vector length mismatch");
    Column c = *this;
    for (std::size_t i = 0; i < size(); ++i) {
        if (erase[i]) {
            c.valid_[i] = 0;
            if (is_numeric()) c.numbers_[i] = 0.0;
            else c.codes_[i] = 0;
        }
    }
    return c;
}

Column Column::renamed(std::string name) const {
    Column c = *this;
    c.name_ = std::move(name);
    c.validate();
    return c;
}

std::string Column::format_cell(std::size_t row) const {
    if (is_null(row)) return {};
    if (is_categorical()) return category(row);
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, numbers_[row]);
    return std::string(buf, res.ptr);
}

bool operator==(const Column& a, const Column& b) {
    if (a.name_ != b.name_ || a.kind_ != b.kind_ || a.valid_ != b.valid_) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a.valid_[i]) continue;
        if (a.is_numeric()) {
            if (a.numbers_[i] != b.numbers_[i]) return false;
        } else if (a.category(i) != b.category(i)) {
            return false;
        }
    }
    return true;
}

Table::Table(std::vector<Column> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) throw InvalidArgument("a table needs at least one column");
    n_rows_ = columns_.front().size();
    std::unordered_set<std::string_view> names;
    for (const auto& c : columns_) {
        if (c.size() != n_rows_)
            throw InvalidArgument("column '" + c.name() + "' has " + std::to_string(c.size()) +
                                  " rows, expected " + std::to_string(n_rows_));
        if (!names.insert(c.name()).second)
            throw InvalidArgument("duplicate column name '" + c.name() + "'");
    }
}

const Column& Table::column(std::size_t j) const {
    if (j >= columns_.size())
        throw InvalidArgument("column index " + std::to_string(j) + " out of range");
    return columns_[j];
}

std::vector<std::string> Table::column_names() const {
    std::vector<std::string> names;
    names.reserve(columns_.size());
    for (const auto& c : columns_) names.push_back(c.name());
    return names;
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
    for (std::size_t j = 0; j < columns_.size(); ++j)
        if (columns_[j].name() == name) return j;
    return std::nullopt;
}

std::size_t Table::column_index(std::string_view name) const {
    if (auto j = find_column(name)) return *j;
    throw InvalidArgument("unknown column '" + std::string(name) + "'");
}

Table Table::take_rows(std::span<const std::size_t> rows) const {
    std::vector<Column> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.take(rows));
    return Table(std::move(out));
}

Table Table::with_column(std::size_t j, Column replacement) const {
    if (j >= columns_.size()) throw InvalidArgument("column index out of range");
    std::vector<Column> out = columns_;
    out[j] = std::move(replacement);
    return Table(std::move(out));
}

bool operator==(const Table& a, const Table& b) { return a.columns_ == b.columns_; }

Table drop_column(const Table& table, std::size_t j) {
    if (j >= table.n_cols())
        throw InvalidArgument("column index " + std::to_string(j) + " out of range");
    if (table.n_cols() < 2) throw InvalidArgument("cannot drop the only column of a table");
    std::vector<Column> out;
    out.reserve(table.n_cols() - 1);
    for (std::size_t k = 0; k < table.n_cols(); ++k)
        if (k != j) out.push_back(table.column(k));
    return Table(std::move(out));
}

} // namespace mechdetect
