#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace rlink::csv {

/// RFC-4180 style reader with a configurable delimiter. Quoted fields may span
/// lines and escape quotes by doubling them.
class Reader {
public:
    enum class Status { Row, Malformed, End };

    Reader(std::istream& in, char delimiter) : in_(in), delim_(delimiter) {}

    /// Reads the next record. On Malformed the rest of the offending line is skipped.
    /// Blank lines are ignored.
    Status next(std::vector<std::string>& fields);

    /// 1-based physical line on which the last returned record started.
    std::size_t line() const noexcept { return record_line_; }

private:
    void skip_line();

    std::istream& in_;
    char delim_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
};

/// Quotes `field` when it contains the delimiter, a quote, or a line break.
std::string escape(std::string_view field, char delimiter);

std::string join_row(const std::vector<std::string>& fields, char delimiter);

}  // namespace rlink::csv
