#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sdgs::cli {

enum class ReportFormat { Table, Csv, JsonLines };

ReportFormat parse_report_format(std::string_view name);

/// Shortest decimal string that reads back to the same double.
std::string format_real(double value);

using Cell = std::variant<std::string, std::int64_t, double, bool>;

struct Column {
    std::string name;
    /// Table view only: show reals x100 with one decimal.
    bool percent = false;
    /// Table view only: fixed decimals for reals (-1 = shortest round trip).
    int decimals = -1;
};

/// Rows of typed cells rendered as an aligned table, CSV or one JSON object
/// per line. CSV and JSON always carry full-precision reals.
class Report {
public:
    explicit Report(std::vector<Column> columns);

    void add_row(std::vector<Cell> row);
    std::size_t rows() const noexcept { return rows_.size(); }
    void write(std::ostream& out, ReportFormat format) const;

private:
    std::vector<Column> columns_;
    std::vector<std::vector<Cell>> rows_;
};

} // namespace sdgs::cli
