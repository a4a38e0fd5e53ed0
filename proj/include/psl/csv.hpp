#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

namespace psl {

/// Formats a floating point value with 15 significant digits.
std::string format_real(double value);

/// Comma-separated writer: header row, LF line endings, 15-digit floats.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::vector<std::string>& header);

    void row(const std::vector<double>& values);
    /// Mixed row of already formatted cells.
    void raw_row(const std::vector<std::string>& cells);

    std::size_t rows_written() const noexcept { return rows_; }

private:
    std::ostream& out_;
    std::size_t columns_;
    std::size_t rows_ = 0;
};

} // namespace psl
