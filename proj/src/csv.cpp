#include "psl/csv.hpp"

#include <cmath>
#include <cstdio>

#include "psl/types.hpp"

namespace psl {

std::string format_real(double value)
{
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", value);
    return buf;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size())
{
    raw_row(header);
    rows_ = 0;
}

void CsvWriter::row(const std::vector<double>& values)
{
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values)
        cells.push_back(format_real(v));
    raw_row(cells);
}

void CsvWriter::raw_row(const std::vector<std::string>& cells)
{
    if (cells.size() != columns_)
        throw Error(ErrorCode::invalid_dimension, "CSV row has the wrong number of columns");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
    ++rows_;
}

} // namespace psl
