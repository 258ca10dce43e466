#pragma once

// Internal CSV helpers shared by the ingestion paths. Numbers are written
// with shortest round-trip formatting so rewritten files are byte-stable.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "stdgi/errors.hpp"

namespace stdgi::csv {

inline std::vector<std::string_view> split_fields(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view field, const std::string& path, std::size_t line_no) {
    field = trim(field);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": not a number: '" +
                         std::string(field) + "'");
    }
    return value;
}

inline long parse_long(std::string_view field, const std::string& path, std::size_t line_no) {
    field = trim(field);
    long value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": not an integer: '" +
                         std::string(field) + "'");
    }
    return value;
}

inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error("format_double failed");
    return std::string(buf, ptr);
}

// Reads all lines, checks the exact header, and returns the data lines
// (1-based line numbers attached for error messages).
struct DataLine {
    std::size_t line_no;
    std::string text;
};

inline std::vector<DataLine> read_csv(const std::string& path, std::string_view expected_header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<DataLine> lines;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (line_no == 1) {
            if (sv != expected_header) {
                throw ParseError(path + ":1: expected header '" + std::string(expected_header) +
                                 "', got '" + std::string(sv) + "'");
            }
            continue;
        }
        if (sv.empty()) continue;
        lines.push_back({line_no, std::string(sv)});
    }
    return lines;
}

}  // namespace stdgi::csv
