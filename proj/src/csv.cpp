#include "mechdetect/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>
#include <vector>

#include "mechdetect/error.hpp"

namespace mechdetect {
namespace {

struct Field {
    std::string text;
    bool quoted = false;
};

using Record = std::vector<Field>;

// Splits RFC-4180 text into records. Quoted fields may span lines and use
// "" for a literal quote. Both LF and CRLF terminate a record.
std::vector<Record> split_records(std::string_view text) {
    std::vector<Record> records;
    Record current;
    Field field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        current.push_back(std::move(field));
        field = Field{};
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // A bare empty line is not a record.
        if (!(current.size() == 1 && current[0].text.empty() && !current[0].quoted))
            records.push_back(std::move(current));
        current.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.text.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.text.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (field_started)
                throw ParseError("line " + std::to_string(line) + ": stray quote inside field");
            in_quotes = true;
            field.quoted = true;
            field_started = true;
            break;
        case ',':
            end_field();
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') break;
            end_record();
            ++line;
            break;
        case '\n':
            end_record();
            ++line;
            break;
        default:
            if (field.quoted)
                throw ParseError("line " + std::to_string(line) + ": text after closing quote");
            field.text.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field");
    if (field_started || !current.empty()) end_record();
    return records;
}

bool needs_quoting(std::string_view s) {
    return s.find_first_of(",\"\r\n") != std::string_view::npos ||
           (!s.empty() && (s.front() == ' ' || s.back() == ' '));
}

void append_field(std::string& out, std::string_view s) {
    if (!needs_quoting(s)) {
        out.append(s);
        return;
    }
    out.push_back('"');
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

} // namespace

std::optional<double> parse_number(std::string_view cell) {
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    if (cell.empty()) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

Table parse_csv(std::string_view text, const SchemaHints& hints) {
    auto records = split_records(text);
    if (records.empty()) throw ParseError("CSV input has no header row");

    const Record& header = records.front();
    const std::size_t n_cols = header.size();
    std::unordered_set<std::string_view> seen;
    for (const auto& f : header) {
        if (f.text.empty()) throw ParseError("empty column name in header");
        if (!seen.insert(f.text).second)
            throw ParseError("duplicate column name '" + f.text + "'");
    }
    for (const auto& [name, kind] : hints) {
        if (!seen.contains(name)) throw InvalidArgument("schema hint for unknown column '" + name + "'");
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != n_cols)
            throw ParseError("ragged row " + std::to_string(r) + ": " +
                             std::to_string(records[r].size()) + " fields, header has " +
                             std::to_string(n_cols));
    }

    const std::size_t n_rows = records.size() - 1;
    std::vector<Column> columns;
    columns.reserve(n_cols);
    for (std::size_t j = 0; j < n_cols; ++j) {
        const std::string& name = header[j].text;
        std::vector<double> numbers(n_rows, 0.0);
        std::vector<std::uint8_t> valid(n_rows, 0);
        bool all_numeric = true;
        for (std::size_t i = 0; i < n_rows; ++i) {
            const Field& f = records[i + 1][j];
            if (f.text.empty()) continue;
            valid[i] = 1;
            if (all_numeric) {
                if (auto v = parse_number(f.text)) numbers[i] = *v;
                else all_numeric = false;
            }
        }

        ColumnKind kind = all_numeric ? ColumnKind::Numeric : ColumnKind::Categorical;
        if (auto hint = hints.find(name); hint != hints.end()) {
            if (hint->second == ColumnKind::Numeric && !all_numeric)
                throw ParseError("column '" + name + "' is hinted numeric but has non-numeric cells");
            kind = hint->second;
        }

        if (kind == ColumnKind::Numeric) {
            columns.push_back(Column::numeric(name, std::move(numbers), std::move(valid)));
        } else {
            std::vector<std::optional<std::string>> cells(n_rows);
            for (std::size_t i = 0; i < n_rows; ++i) {
                const Field& f = records[i + 1][j];
                if (!f.text.empty()) cells[i] = f.text;
            }
            columns.push_back(Column::categorical_from_strings(name, cells));
        }
    }
    return Table(std::move(columns));
}

Table load_csv(const std::filesystem::path& path, const SchemaHints& hints) {
    return parse_csv(read_text_file(path), hints);
}

std::string to_csv(const Table& table) {
    std::string out;
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
        if (j) out.push_back(',');
        append_field(out, table.column(j).name());
    }
    out.push_back('\n');
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        for (std::size_t j = 0; j < table.n_cols(); ++j) {
            if (j) out.push_back(',');
            append_field(out, table.column(j).format_cell(i));
        }
        out.push_back('\n');
    }
    return out;
}

void save_csv(const Table& table, const std::filesystem::path& path) {
    write_text_file(path, to_csv(table));
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
    return std::move(ss).str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("error while writing '" + path.string() + "'");
}

} // namespace mechdetect
