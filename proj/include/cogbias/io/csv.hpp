#ifndef COGBIAS_IO_CSV_HPP
#define COGBIAS_IO_CSV_HPP

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "../types.hpp"

namespace cogbias::io {

/** Split one CSV line. Double-quoted fields may contain commas and `""` escapes. */
inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty() && !was_quoted) {
            quoted = was_quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        } else {
            field += c;
        }
    }
    if (quoted) {
        throw Error("unterminated quoted field at line " + std::to_string(line_no));
    }
    out.push_back(std::move(field));
    return out;
}

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

/** Shortest text that reads back to exactly `v`. */
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/** `v` with exactly `decimals` digits after the point. */
inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::string_view what) {
    double v = 0;
    auto s = text;
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        throw Error("not a number: '" + std::string(text) + "' (" + std::string(what) + ")");
    }
    return v;
}

/**
 * Parse a score matrix from CSV text. The first header cell names the feature column, the rest are
 * run_ids; each row holds a feature label followed by one cell per run. Empty cells are missing.
 */
inline ScoreMatrix parse_score_matrix(std::string_view text, Granularity granularity, std::string_view source = "<input>") {
    std::vector<std::string> rows, cols;
    std::vector<std::optional<double>> values;
    std::size_t line_no = 0;
    bool header = true;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto cells = split_csv_line(line, line_no);
        if (header) {
            if (cells.size() < 2) {
                throw Error(std::string(source) + ": header needs a feature column and at least one run");
            }
            for (std::size_t c = 1; c < cells.size(); ++c) {
                cols.push_back(trim(cells[c]));
            }
            header = false;
            continue;
        }
        if (cells.size() != cols.size() + 1) {
            throw Error(std::string(source) + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(cols.size() + 1));
        }
        rows.push_back(trim(cells[0]));
        for (std::size_t c = 1; c < cells.size(); ++c) {
            auto cell = trim(cells[c]);
            if (cell.empty()) {
                values.emplace_back();
                continue;
            }
            double v = parse_double(cell, std::string(source) + " line " + std::to_string(line_no));
            if (!(v >= -1.0 && v <= 1.0)) {
                throw Error(std::string(source) + ": value " + cell + " at line " + std::to_string(line_no) + " outside [-1, 1]");
            }
            values.emplace_back(v);
        }
        if (pos > text.size()) {
            break;
        }
    }
    if (header) {
        throw Error(std::string(source) + ": missing header row");
    }
    try {
        return ScoreMatrix(granularity, std::move(rows), std::move(cols), std::move(values));
    } catch (const Error& e) {
        throw Error(std::string(source) + ": " + e.what());
    }
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw Error("write failed for '" + path.string() + "'");
    }
}

inline ScoreMatrix read_score_matrix(const std::filesystem::path& path, Granularity granularity = Granularity::bias_level) {
    return parse_score_matrix(read_text_file(path), granularity, path.string());
}

/**
 * CSV text of a matrix. With `decimals` every value is printed with that many decimals,
 * otherwise with the shortest exact representation.
 */
inline std::string format_score_matrix(const ScoreMatrix& matrix, std::optional<int> decimals = std::nullopt) {
    std::string out = "feature";
    for (const auto& c : matrix.cols()) {
        out += "," + csv_field(c);
    }
    out += "\n";
    for (std::size_t r = 0; r < matrix.num_rows(); ++r) {
        out += csv_field(matrix.rows()[r]);
        for (std::size_t c = 0; c < matrix.num_cols(); ++c) {
            out += ",";
            if (auto v = matrix.at(r, c)) {
                out += decimals ? format_fixed(*v, *decimals) : format_double(*v);
            }
        }
        out += "\n";
    }
    return out;
}

inline void write_score_matrix(const std::filesystem::path& path, const ScoreMatrix& matrix, std::optional<int> decimals = std::nullopt) {
    write_text_file(path, format_score_matrix(matrix, decimals));
}

}

#endif
