// Minimal RFC-4180 CSV emission: CRLF row endings, quoting only where the
// field demands it, locale-independent number formatting.
#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace d2d {

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += "\"\"";
        else out += ch;
    }
    out += '"';
    return out;
}

inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary), columns_(header.size()) {
        if (!out_) throw std::runtime_error("csv: cannot open " + path);
        write_row_strings(header);
    }

    void row(const std::vector<std::string>& fields) {
        if (fields.size() != columns_)
            throw std::runtime_error("csv: column count mismatch");
        write_row_strings(fields);
    }

    void row_nums(const std::vector<double>& values,
                  const std::string& trailing = std::string()) {
        std::vector<std::string> fields;
        fields.reserve(values.size() + (trailing.empty() ? 0 : 1));
        for (double v : values) fields.push_back(csv_num(v));
        if (!trailing.empty()) fields.push_back(trailing);
        row(fields);
    }

private:
    void write_row_strings(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << csv_escape(fields[i]);
        }
        out_ << "\r\n";
    }

    std::ofstream out_;
    std::size_t columns_;
};

}  // namespace d2d
