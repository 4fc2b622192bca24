#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mechdetect/table.hpp"

namespace mechdetect {

/// One column of an error mask: bit i is 1 iff row i is erroneous.
struct MaskColumn {
    std::vector<std::uint8_t> bits;
    std::size_t source_column = 0;

    std::size_t size() const noexcept { return bits.size(); }
    std::size_t error_count() const noexcept;
    bool has_both_classes() const noexcept {
        const auto e = error_count();
        return e > 0 && e < bits.size();
    }
    friend bool operator==(const MaskColumn&, const MaskColumn&) = default;
};

// Binary N x D matrix marking erroneous cells, row-major.
class ErrorMask {
public:
    ErrorMask() = default;
    /// All-zero mask.
    ErrorMask(std::size_t rows, std::size_t cols);
    /// Row-major bits; every entry must be 0 or 1.
    ErrorMask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> bits);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool at(std::size_t i, std::size_t j) const { return bits_[i * cols_ + j] != 0; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    /// Copy with column j replaced by `column` (length must equal rows()).
    ErrorMask with_column(std::size_t j, std::span<const std::uint8_t> column) const;
    std::size_t column_count(std::size_t j) const;

    bool matches(const Table& table) const noexcept {
        return rows_ == table.n_rows() && cols_ == table.n_cols();
    }

    friend bool operator==(const ErrorMask&, const ErrorMask&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// 1 exactly at the table's null cells.
ErrorMask mask_from_missing(const Table& table);

MaskColumn mask_column(const ErrorMask& mask, std::size_t j);

// Text format: "rows cols" on the first line, then one line per row of
// space-separated 0/1 digits.
std::string format_mask(const ErrorMask& mask);
ErrorMask parse_mask(std::string_view text);
void save_mask(const ErrorMask& mask, const std::filesystem::path& path);
ErrorMask load_mask(const std::filesystem::path& path);

} // namespace mechdetect
