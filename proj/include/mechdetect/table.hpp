#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mechdetect {

enum class ColumnKind { Numeric, Categorical };

std::string_view to_string(ColumnKind kind);

// One column of a table. Absent cells are tracked in a validity vector next
// to the values, so a null never shares a representation with a real value.
// Categorical cells hold codes into a per-column dictionary.
class Column {
public:
    /// `valid` may be empty, meaning every cell is present.
    static Column numeric(std::string name, std::vector<double> values,
                          std::vector<std::uint8_t> valid = {});
    static Column categorical(std::string name, std::vector<std::string> dictionary,
                              std::vector<std::uint32_t> codes,
                              std::vector<std::uint8_t> valid = {});
    /// Builds the dictionary in order of first appearance; nullopt is a null cell.
    static Column categorical_from_strings(std::string name,
                                           std::span<const std::optional<std::string>> cells);

    const std::string& name() const noexcept { return name_; }
    ColumnKind kind() const noexcept { return kind_; }
    bool is_numeric() const noexcept { return kind_ == ColumnKind::Numeric; }
    bool is_categorical() const noexcept { return kind_ == ColumnKind::Categorical; }
    std::size_t size() const noexcept { return valid_.size(); }

    bool is_null(std::size_t row) const { return valid_[row] == 0; }
    std::size_t null_count() const noexcept;

    /// Value of a present numeric cell.
    double number(std::size_t row) const { return numbers_[row]; }
    /// Dictionary code of a present categorical cell.
    std::uint32_t code(std::size_t row) const { return codes_[row]; }
    const std::string& category(std::size_t row) const { return dictionary_[codes_[row]]; }

    std::span<const double> numbers() const noexcept { return numbers_; }
    std::span<const std::uint32_t> codes() const noexcept { return codes_; }
    std::span<const std::uint8_t> validity() const noexcept { return valid_; }
    std::span<const std::string> dictionary() const noexcept { return dictionary_; }

    /// Number of distinct present values.
    std::size_t distinct_count() const;

    Column take(std::span<const std::size_t> rows) const;
    /// Copy with cells nulled wherever `erase[row]` is non-zero.
    Column with_erased(std::span<const std::uint8_t> erase) const;
    Column renamed(std::string name) const;

    /// Text form used by the CSV writer; empty for null cells.
    std::string format_cell(std::size_t row) const;

    friend bool operator==(const Column& a, const Column& b);

private:
    Column() = default;
    void validate() const;

    std::string name_;
    ColumnKind kind_ = ColumnKind::Numeric;
    std::vector<double> numbers_;
    std::vector<std::uint32_t> codes_;
    std::vector<std::string> dictionary_;
    std::vector<std::uint8_t> valid_;
};

// Column-oriented table, immutable once built. All columns share one row
// count and carry unique non-empty names.
class Table {
public:
    explicit Table(std::vector<Column> columns);

    std::size_t n_rows() const noexcept { return n_rows_; }
    std::size_t n_cols() const noexcept { return columns_.size(); }

    const Column& column(std::size_t j) const;
    const std::vector<Column>& columns() const noexcept { return columns_; }
    std::vector<std::string> column_names() const;

    std::optional<std::size_t> find_column(std::string_view name) const;
    /// Like find_column but throws InvalidArgument for unknown names.
    std::size_t column_index(std::string_view name) const;

    Table take_rows(std::span<const std::size_t> rows) const;
    /// Copy with column j replaced; the replacement must keep the row count.
    Table with_column(std::size_t j, Column replacement) const;

    friend bool operator==(const Table& a, const Table& b);

private:
    std::vector<Column> columns_;
    std::size_t n_rows_ = 0;
};

/// The table without column j, remaining columns in their original order.
Table drop_column(const Table& table, std::size_t j);

} // namespace mechdetect
