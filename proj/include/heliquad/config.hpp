#pragma once

// Line-oriented key-value config files:
//   key value [value ...]      or      key = value [value ...]
// '#' starts a comment. Repeated keys are kept in file order (used for
// table rows such as chord points and polar rows).

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "heliquad/errors.hpp"
#include "heliquad/util.hpp"

namespace heliquad {

inline double parse_double(const std::string& tok, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw ParseError(where, 0, "not a number: '" + tok + "'");
    return v;
}

class KeyValueFile {
public:
    static KeyValueFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file: " + path);
        KeyValueFile f;
        f.path_ = path;
        std::string line;
        int ln = 0;
        while (std::getline(in, line)) {
            ++ln;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            // normalize "key = v" to "key v"
            std::string norm;
            norm.reserve(line.size());
            for (char c : line) norm += (c == '=') ? ' ' : c;
            auto toks = split_ws(norm);
            if (toks.size() < 2) throw ParseError(path, ln, "expected 'key value'");
            const std::string key = toks.front();
            toks.erase(toks.begin());
            f.entries_.push_back({key, toks, ln});
        }
        return f;
    }

    bool has(const std::string& key) const {
        for (const auto& e : entries_)
            if (e.key == key) return true;
        return false;
    }

    // Scalar getters use the last occurrence of the key.
    std::string get_string(const std::string& key) const {
        const Entry* e = find_last(key);
        if (!e) throw ParseError(path_, 0, "missing key: " + key);
        return e->values.front();
    }
    std::string get_string(const std::string& key, const std::string& dflt) const {
        const Entry* e = find_last(key);
        return e ? e->values.front() : dflt;
    }

    double get_double(const std::string& key) const {
        const Entry* e = find_last(key);
        if (!e) throw ParseError(path_, 0, "missing key: " + key);
        return parse_double(e->values.front(), at(e->line));
    }
    double get_double(const std::string& key, double dflt) const {
        const Entry* e = find_last(key);
        return e ? parse_double(e->values.front(), at(e->line)) : dflt;
    }

    std::vector<double> get_doubles(const std::string& key, std::size_t n) const {
        const Entry* e = find_last(key);
        if (!e) throw ParseError(path_, 0, "missing key: " + key);
        if (e->values.size() != n)
            throw ParseError(path_, e->line,
                             "key '" + key + "' expects " + std::to_string(n) + " values");
        std::vector<double> out;
        for (const auto& v : e->values) out.push_back(parse_double(v, at(e->line)));
        return out;
    }

    // All occurrences of a repeated key, in file order.
    std::vector<std::vector<double>> get_rows(const std::string& key) const {
        std::vector<std::vector<double>> rows;
        for (const auto& e : entries_) {
            if (e.key != key) continue;
            std::vector<double> r;
            for (const auto& v : e.values) r.push_back(parse_double(v, at(e.line)));
            rows.push_back(std::move(r));
        }
        return rows;
    }

    const std::string& path() const { return path_; }

private:
    struct Entry {
        std::string key;
        std::vector<std::string> values;
        int line;
    };

    const Entry* find_last(const std::string& key) const {
        const Entry* found = nullptr;
        for (const auto& e : entries_)
            if (e.key == key) found = &e;
        return found;
    }

    std::string at(int line) const { return path_ + ":" + std::to_string(line); }

    std::string path_;
    std::vector<Entry> entries_;
};

}  // namespace heliquad
