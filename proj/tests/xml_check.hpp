#pragma once

// Small standalone XML well-formedness checker used as the oracle for the
// emitted SVG files. Deliberately independent of the figure renderer: it only
// knows the XML grammar (prolog, nesting, attribute quoting, entities,
// comments) and nothing about how the documents were produced.

#include <cctype>
#include <string>
#include <vector>

namespace testutil {

struct XmlCheck {
    bool ok = false;
    std::string error;
    std::size_t elements = 0;
};

namespace xmldetail {

inline bool name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}
inline bool name_char(char c) {
    return name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.';
}

} // namespace xmldetail

inline XmlCheck check_xml(const std::string& text) {
    using namespace xmldetail;
    XmlCheck result;
    auto fail = [&result](std::size_t pos, const std::string& why) {
        result.ok = false;
        result.error = why + " at offset " + std::to_string(pos);
        return result;
    };

    std::size_t i = 0;
    const std::size_t n = text.size();
    std::vector<std::string> stack;
    bool seen_root = false;
    bool after_root = false;

    auto skip_ws = [&] {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };

    auto check_entity = [&](std::size_t at) -> bool {
        std::size_t j = at + 1; // past '&'
        if (j < n && text[j] == '#') {
            ++j;
            if (j < n && (text[j] == 'x' || text[j] == 'X')) ++j;
            std::size_t digits = 0;
            while (j < n && std::isxdigit(static_cast<unsigned char>(text[j]))) ++j, ++digits;
            return digits > 0 && j < n && text[j] == ';';
        }
        std::size_t letters = 0;
        while (j < n && std::isalpha(static_cast<unsigned char>(text[j]))) ++j, ++letters;
        return letters > 0 && j < n && text[j] == ';';
    };

    // optional XML declaration
    skip_ws();
    if (text.compare(i, 5, "<?xml") == 0) {
        auto end = text.find("?>", i);
        if (end == std::string::npos) return fail(i, "unterminated XML declaration");
        i = end + 2;
    }

    while (i < n) {
        if (text[i] != '<') {
            // character data
            if (text[i] == '&') {
                if (!check_entity(i)) return fail(i, "malformed entity reference");
                i = text.find(';', i) + 1;
                continue;
            }
            if (stack.empty() && !std::isspace(static_cast<unsigned char>(text[i])))
                return fail(i, "character data outside the root element");
            ++i;
            continue;
        }

        // a markup construct
        if (text.compare(i, 4, "<!--") == 0) {
            auto end = text.find("-->", i + 4);
            if (end == std::string::npos) return fail(i, "unterminated comment");
            i = end + 3;
            continue;
        }
        if (text.compare(i, 2, "<!") == 0) {
            auto end = text.find('>', i);
            if (end == std::string::npos) return fail(i, "unterminated declaration");
            i = end + 1;
            continue;
        }
        if (text.compare(i, 2, "<?") == 0) {
            auto end = text.find("?>", i);
            if (end == std::string::npos) return fail(i, "unterminated processing instruction");
            i = end + 2;
            continue;
        }

        if (text.compare(i, 2, "</") == 0) {
            std::size_t j = i + 2;
            if (j >= n || !name_start(text[j])) return fail(i, "bad closing tag name");
            std::size_t start = j;
            while (j < n && name_char(text[j])) ++j;
            const std::string name = text.substr(start, j - start);
            while (j < n && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j >= n || text[j] != '>') return fail(i, "closing tag not terminated");
            if (stack.empty()) return fail(i, "closing tag with no open element");
            if (stack.back() != name)
                return fail(i, "mismatched closing tag </" + name + ">, expected </" +
                                   stack.back() + ">");
            stack.pop_back();
            if (stack.empty()) after_root = true;
            i = j + 1;
            continue;
        }

        // opening or self-closing tag
        std::size_t j = i + 1;
        if (j >= n || !name_start(text[j])) return fail(i, "bad tag name");
        std::size_t start = j;
        while (j < n && name_char(text[j])) ++j;
        const std::string name = text.substr(start, j - start);
        if (after_root) return fail(i, "second root element <" + name + ">");

        // attributes
        bool self_closing = false;
        while (true) {
            while (j < n && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j >= n) return fail(i, "unterminated tag <" + name + ">");
            if (text[j] == '>') {
                ++j;
                break;
            }
            if (text[j] == '/') {
                if (j + 1 >= n || text[j + 1] != '>') return fail(j, "stray '/' in tag");
                self_closing = true;
                j += 2;
                break;
            }
            if (!name_start(text[j])) return fail(j, "bad attribute name");
            while (j < n && name_char(text[j])) ++j;
            while (j < n && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j >= n || text[j] != '=') return fail(j, "attribute missing '='");
            ++j;
            while (j < n && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j >= n || (text[j] != '"' && text[j] != '\''))
                return fail(j, "attribute value not quoted");
            const char quote = text[j];
            ++j;
            while (j < n && text[j] != quote) {
                if (text[j] == '<') return fail(j, "raw '<' in attribute value");
                if (text[j] == '&' && !check_entity(j))
                    return fail(j, "malformed entity in attribute value");
                ++j;
            }
            if (j >= n) return fail(i, "unterminated attribute value");
            ++j;
        }

        ++result.elements;
        seen_root = true;
        if (!self_closing) {
            stack.push_back(name);
        } else if (stack.empty()) {
            after_root = true;
        }
        i = j;
    }

    if (!stack.empty()) return fail(n, "unclosed element <" + stack.back() + ">");
    if (!seen_root) return fail(n, "no root element");
    result.ok = true;
    return result;
}

} // namespace testutil
