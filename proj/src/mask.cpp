#include "mechdetect/mask.hpp"

#include <algorithm>
#include <charconv>

#include "mechdetect/csv.hpp"
#include "mechdetect/error.hpp"

namespace mechdetect {

std::size_t MaskColumn::error_count() const noexcept {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

ErrorMask::ErrorMask(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

ErrorMask::ErrorMask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> bits)
    : rows_(rows), cols_(cols), bits_(std::move(bits)) {
    if (bits_.size() != rows_ * cols_)
        throw InvalidArgument("mask payload has " + std::to_string(bits_.size()) +
                              " entries, shape needs " + std::to_string(rows_ * cols_));
    for (auto b : bits_)
        if (b > 1) throw InvalidArgument("mask entries must be 0 or 1");
}

ErrorMask ErrorMask::with_column(std::size_t j, std::span<const std::uint8_t> column) const {
    if (j >= cols_) throw InvalidArgument("mask column index out of range");
    if (column.size() != rows_) throw InvalidArgument("mask column length mismatch");
    ErrorMask out = *this;
    for (std::size_t i = 0; i < rows_; ++i) {
        if (column[i] > 1) throw InvalidArgument("mask entries must be 0 or 1");
        out.bits_[i * cols_ + j] = column[i];
    }
    return out;
}

std::size_t ErrorMask::column_count(std::size_t j) const {
    if (j >= cols_) throw InvalidArgument("mask column index out of range");
    std::size_t n = 0;
    for (std::size_t i = 0; i < rows_; ++i) n += bits_[i * cols_ + j];
    return n;
}

ErrorMask mask_from_missing(const Table& table) {
    std::vector<std::uint8_t> bits(table.n_rows() * table.n_cols(), 0);
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
        const Column& c = table.column(j);
        for (std::size_t i = 0; i < table.n_rows(); ++i)
            bits[i * table.n_cols() + j] = c.is_null(i) ? 1 : 0;
    }
    return ErrorMask(table.n_rows(), table.n_cols(), std::move(bits));
}

MaskColumn mask_column(const ErrorMask& mask, std::size_t j) {
    if (j >= mask.cols())
        throw InvalidArgument("mask column index " + std::to_string(j) + " out of range");
    MaskColumn out;
    out.source_column = j;
    out.bits.resize(mask.rows());
    for (std::size_t i = 0; i < mask.rows(); ++i) out.bits[i] = mask.at(i, j) ? 1 : 0;
    return out;
}

std::string format_mask(const ErrorMask& mask) {
    std::string out = std::to_string(mask.rows()) + " " + std::to_string(mask.cols()) + "\n";
    out.reserve(out.size() + mask.rows() * (2 * mask.cols() + 1));
    for (std::size_t i = 0; i < mask.rows(); ++i) {
        for (std::size_t j = 0; j < mask.cols(); ++j) {
            if (j) out.push_back(' ');
            out.push_back(mask.at(i, j) ? '1' : '0');
        }
        out.push_back('\n');
    }
    return out;
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::size_t parse_size(std::string_view token, std::string_view what) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size())
        throw ParseError("mask header: bad " + std::string(what) + " '" + std::string(token) + "'");
    return v;
}

} // namespace

ErrorMask parse_mask(std::string_view text) {
    auto lines = split_lines(text);
    // Trailing blank lines are tolerated; anything else must be a mask row.
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw ParseError("mask file is empty");

    const auto header = lines.front();
    const auto space = header.find(' ');
    if (space == std::string_view::npos) throw ParseError("mask header must be 'rows cols'");
    const std::size_t rows = parse_size(header.substr(0, space), "row count");
    const std::size_t cols = parse_size(header.substr(space + 1), "column count");

    if (lines.size() - 1 != rows)
        throw ParseError("mask header declares " + std::to_string(rows) + " rows but payload has " +
                         std::to_string(lines.size() - 1));

    std::vector<std::uint8_t> bits;
    bits.reserve(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto line = lines[i + 1];
        if (line.size() != (cols == 0 ? 0 : 2 * cols - 1))
            throw ParseError("mask row " + std::to_string(i) + " does not have " +
                             std::to_string(cols) + " entries");
        for (std::size_t j = 0; j < cols; ++j) {
            const char c = line[2 * j];
            if (c != '0' && c != '1')
                throw ParseError("mask row " + std::to_string(i) + ": entry must be 0 or 1");
            if (j + 1 < cols && line[2 * j + 1] != ' ')
                throw ParseError("mask row " + std::to_string(i) + ": entries must be space-separated");
            bits.push_back(c == '1' ? 1 : 0);
        }
    }
    return ErrorMask(rows, cols, std::move(bits));
}

void save_mask(const ErrorMask& mask, const std::filesystem::path& path) {
    write_text_file(path, format_mask(mask));
}

ErrorMask load_mask(const std::filesystem::path& path) { return parse_mask(read_text_file(path)); }

} // namespace mechdetect
