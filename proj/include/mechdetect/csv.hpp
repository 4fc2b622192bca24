#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "mechdetect/table.hpp"

namespace mechdetect {

/// Per-column kind overrides, keyed by header name.
using SchemaHints = std::map<std::string, ColumnKind, std::less<>>;

/// Parses one numeric cell: surrounding blanks allowed, must be finite.
std::optional<double> parse_number(std::string_view cell);

// RFC-4180 input with a mandatory header row. An empty field is a missing
// cell. Without a hint, a column is Numeric when every non-empty cell parses
// as a finite real, Categorical otherwise.
Table parse_csv(std::string_view text, const SchemaHints& hints = {});
Table load_csv(const std::filesystem::path& path, const SchemaHints& hints = {});

/// Writes numbers in shortest round-trip form and quotes only when needed,
/// so loading the output of an inferred-schema table reproduces it exactly.
std::string to_csv(const Table& table);
void save_csv(const Table& table, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

} // namespace mechdetect
