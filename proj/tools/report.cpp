#include "report.hpp"

#include "sdgs/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace sdgs::cli {

ReportFormat parse_report_format(std::string_view name) {
    if (name == "table") {
        return ReportFormat::Table;
    }
    if (name == "csv") {
        return ReportFormat::Csv;
    }
    if (name == "jsonl") {
        return ReportFormat::JsonLines;
    }
    throw InvalidInput("unknown report format '" + std::string(name) + "'");
}

std::string format_real(double value) {
    if (!std::isfinite(value)) {
        return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) {
        return text;
    }
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::string plain(const Cell& cell) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::string>) {
                return v;
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, double>) {
                return format_real(v);
            } else {
                return std::to_string(v);
            }
        },
        cell);
}

std::string tabular(const Cell& cell, const Column& col) {
    if (const double* v = std::get_if<double>(&cell)) {
        char buf[64];
        if (col.percent) {
            std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
            return buf;
        }
        if (col.decimals >= 0) {
            std::snprintf(buf, sizeof buf, "%.*f", col.decimals, *v);
            return buf;
        }
    }
    return plain(cell);
}

nlohmann::ordered_json to_json(const Cell& cell) {
    return std::visit([](const auto& v) { return nlohmann::ordered_json(v); }, cell);
}

} // namespace

Report::Report(std::vector<Column> columns) : columns_(std::move(columns)) {}

void Report::add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) {
        throw InvalidInput("report row has " + std::to_string(row.size()) + " cells for " +
                           std::to_string(columns_.size()) + " columns");
    }
    rows_.push_back(std::move(row));
}

void Report::write(std::ostream& out, ReportFormat format) const {
    switch (format) {
    case ReportFormat::Csv: {
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            out << (j ? "," : "") << csv_field(columns_[j].name);
        }
        out << '\n';
        for (const auto& row : rows_) {
            for (std::size_t j = 0; j < row.size(); ++j) {
                out << (j ? "," : "") << csv_field(plain(row[j]));
            }
            out << '\n';
        }
        return;
    }
    case ReportFormat::JsonLines: {
        for (const auto& row : rows_) {
            nlohmann::ordered_json obj = nlohmann::ordered_json::object();
            for (std::size_t j = 0; j < row.size(); ++j) {
                obj[columns_[j].name] = to_json(row[j]);
            }
            out << obj.dump() << '\n';
        }
        return;
    }
    case ReportFormat::Table: {
        std::vector<std::vector<std::string>> text;
        std::vector<std::size_t> width(columns_.size());
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            width[j] = columns_[j].name.size();
        }
        for (const auto& row : rows_) {
            auto& line = text.emplace_back();
            for (std::size_t j = 0; j < row.size(); ++j) {
                line.push_back(tabular(row[j], columns_[j]));
                width[j] = std::max(width[j], line.back().size());
            }
        }
        const auto emit = [&](const auto& cells) {
            for (std::size_t j = 0; j < cells.size(); ++j) {
                const std::string& s = cells[j];
                if (j) {
                    out << "  ";
                }
                out << s;
                if (j + 1 < cells.size()) {
                    out << std::string(width[j] - s.size(), ' ');
                }
            }
            out << '\n';
        };
        std::vector<std::string> header;
        for (const auto& c : columns_) {
            header.push_back(c.name);
        }
        emit(header);
        for (const auto& line : text) {
            emit(line);
        }
        return;
    }
    }
}

} // namespace sdgs::cli
