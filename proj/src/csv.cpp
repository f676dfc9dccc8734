#include "rlink/csv.hpp"

namespace rlink::csv {

void Reader::skip_line() {
    int c;
    while ((c = in_.get()) != EOF) {
        if (c == '\n') {
            ++line_;
            return;
        }
    }
}

Reader::Status Reader::next(std::vector<std::string>& fields) {
    fields.clear();

    // Skip blank lines.
    int c = in_.peek();
    while (c == '\n' || c == '\r') {
        in_.get();
        if (c == '\n') ++line_;
        c = in_.peek();
    }
    if (c == EOF) return Status::End;
    record_line_ = line_;

    std::string field;
    bool quoted = false;      // current field started with a quote
    bool in_quotes = false;   // inside an open quoted section
    bool after_quote = false; // a quoted section just closed

    while (true) {
        c = in_.get();
        if (in_quotes) {
            if (c == EOF) return Status::Malformed;
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                    after_quote = true;
                }
                continue;
            }
            if (c == '\n') ++line_;
            field.push_back(static_cast<char>(c));
            continue;
        }

        if (c == EOF || c == '\n' || (c == '\r' && (in_.peek() == '\n' || in_.peek() == EOF))) {
            if (c == '\r') c = in_.get();
            if (c == '\n') ++line_;
            fields.push_back(std::move(field));
            return Status::Row;
        }
        if (c == delim_) {
            fields.push_back(std::move(field));
            field.clear();
            quoted = after_quote = false;
            continue;
        }
        if (c == '"') {
            if (field.empty() && !quoted) {
                quoted = in_quotes = true;
                continue;
            }
            skip_line();
            return Status::Malformed;
        }
        if (after_quote) {
            // Text after a closing quote.
            if (c != '\n') skip_line();
            return Status::Malformed;
        }
        field.push_back(static_cast<char>(c));
    }
}

std::string escape(std::string_view field, char delimiter) {
    if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

std::string join_row(const std::vector<std::string>& fields, char delimiter) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out.push_back(delimiter);
        out += escape(fields[i], delimiter);
    }
    return out;
}

}  // namespace rlink::csv
