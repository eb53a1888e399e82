#include "phishrl/csv.hpp"

#include "phishrl/errors.hpp"

namespace phishrl::csv {

std::optional<std::vector<std::string>> Reader::next() {
    while (true) {
        if (in_.peek() == std::char_traits<char>::eof()) return std::nullopt;
        record_line_ = line_;
        std::vector<std::string> fields;
        std::string field;
        bool quoted = false;
        bool any = false;
        while (true) {
            const int ch = in_.get();
            if (ch == std::char_traits<char>::eof()) {
                if (quoted) throw FormatError("unterminated quoted field starting on line " + std::to_string(record_line_));
                break;
            }
            const char c = static_cast<char>(ch);
            any = true;
            if (quoted) {
                if (c == '"') {
                    if (in_.peek() == '"') {
                        in_.get();
                        field.push_back('"');
                    } else {
                        quoted = false;
                    }
                } else {
                    if (c == '\n') ++line_;
                    field.push_back(c);
                }
                continue;
            }
            if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else if (c == '\r') {
                if (in_.peek() == '\n') continue;
                ++line_;
                break;
            } else if (c == '\n') {
                ++line_;
                break;
            } else {
                field.push_back(c);
            }
        }
        fields.push_back(std::move(field));
        if (!any || (fields.size() == 1 && fields[0].empty())) {
            if (in_.peek() == std::char_traits<char>::eof() && !any) return std::nullopt;
            continue;
        }
        return fields;
    }
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape(fields[i]);
    }
    out << '\n';
}

}  // namespace phishrl::csv
