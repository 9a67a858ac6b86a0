#pragma once

// Minimal CSV helpers. Doubles are written with 17 significant digits so a
// write/read round trip reproduces them bit-exactly.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "heliquad/errors.hpp"
#include "heliquad/util.hpp"

namespace heliquad {

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw IoError("cannot open for writing: " + path);
    }

    void header(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) out_ << ',';
            out_ << cols[i];
        }
        out_ << '\n';
    }

    void row(const std::vector<double>& vals) {
        char buf[32];
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i) out_ << ',';
            std::snprintf(buf, sizeof buf, "%.17g", vals[i]);
            out_ << buf;
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    CsvTable t;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (ln == 1) {
            std::string cur;
            for (char c : line) {
                if (c == ',') t.columns.push_back(cur), cur.clear();
                else cur += c;
            }
            t.columns.push_back(cur);
            if (t.columns.empty()) throw ParseError(path, ln, "missing header row");
            continue;
        }
        if (trim(line).empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            const std::string tok = line.substr(start, comma == std::string::npos
                                                           ? std::string::npos
                                                           : comma - start);
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0')
                throw ParseError(path, ln, "bad number '" + tok + "'");
            row.push_back(v);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (row.size() != t.columns.size())
            throw ParseError(path, ln, "expected " + std::to_string(t.columns.size()) +
                                           " fields, got " + std::to_string(row.size()));
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw ParseError(path, 0, "empty file");
    return t;
}

}  // namespace heliquad
