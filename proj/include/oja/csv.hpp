#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace oja::csv {

/// One record, possibly spanning several physical lines when quoted fields
/// contain newlines. line_no is the 1-based physical line the record starts on.
struct Row {
    std::vector<std::string> fields;
    std::size_t line_no = 0;
};

/// RFC-4180 reader: comma separator, double-quote quoting, "" escapes,
/// CR LF tolerated. Dialect is fixed; anything else is out of scope.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Reads the next record. Returns false at end of input.
    bool next(Row& row) {
        row.fields.clear();
        int c = in_.get();
        // skip blank lines between records
        while (c == '\n' || c == '\r') {
            if (c == '\n') ++line_;
            c = in_.get();
        }
        if (c == EOF) return false;
        row.line_no = line_;

        std::string field;
        bool in_quotes = false;
        bool any = false;
        while (true) {
            if (c == EOF) {
                row.fields.push_back(field);
                any = true;
                break;
            }
            char ch = static_cast<char>(c);
            if (in_quotes) {
                if (ch == '"') {
                    int peek = in_.get();
                    if (peek == '"') {
                        field.push_back('"');
                    } else {
                        in_quotes = false;
                        c = peek;
                        continue;
                    }
                } else {
                    if (ch == '\n') ++line_;
                    field.push_back(ch);
                }
            } else if (ch == '"' && field.empty()) {
                in_quotes = true;
            } else if (ch == ',') {
                row.fields.push_back(field);
                field.clear();
            } else if (ch == '\r') {
                // swallow; newline decides the record boundary
            } else if (ch == '\n') {
                ++line_;
                row.fields.push_back(field);
                any = true;
                break;
            } else {
                field.push_back(ch);
            }
            c = in_.get();
        }
        return any;
    }

private:
    std::istream& in_;
    std::size_t line_ = 1;
};

inline std::string escape(const std::string& s) {
    bool needs = false;
    for (char c : s)
        if (c == ',' || c == '"' || c == '\n' || c == '\r') { needs = true; break; }
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape(fields[i]);
    }
    out << '\n';
}

inline std::string row_string(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += escape(fields[i]);
    }
    out += '\n';
    return out;
}

} // namespace oja::csv
