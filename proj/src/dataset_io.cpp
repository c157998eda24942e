#include "sdgs/data_io.hpp"

#include "sdgs/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

namespace sdgs {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view unquote(std::string_view s) {
    if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

/// A field of a line together with its 1-based starting column.
struct Field {
    std::string_view text;
    std::size_t column;
};

std::vector<Field> split_fields(std::string_view line, char sep, std::size_t base_column) {
    std::vector<Field> out;
    std::size_t start = 0;
    char quote = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        const char c = i < line.size() ? line[i] : sep;
        if (quote != 0) {
            if (c == quote) {
                quote = 0;
            }
            if (i < line.size()) {
                continue;
            }
        } else if (c == '\'' || c == '"') {
            quote = c;
            continue;
        }
        if (c == sep) {
            std::string_view raw = line.substr(start, i - start);
            std::size_t lead = 0;
            while (lead < raw.size() && std::isspace(static_cast<unsigned char>(raw[lead]))) {
                ++lead;
            }
            out.push_back({trim(raw), base_column + start + lead});
            start = i + 1;
        }
    }
    return out;
}

double parse_real(const Field& f, std::size_t line) {
    std::string_view text = unquote(f.text);
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw ParseError("malformed numeric field '" + std::string(f.text) + "'", line, f.column);
    }
    return value;
}

std::uint8_t parse_label(const Field& f, std::size_t line) {
    const std::string v = lower(unquote(f.text));
    if (v == "1" || v == "1.0" || v == "true" || v == "yes") {
        return 1;
    }
    if (v == "0" || v == "0.0" || v == "false" || v == "no") {
        return 0;
    }
    throw InvalidInput("non-binary label value '" + std::string(f.text) + "' (line " +
                       std::to_string(line) + ", column " + std::to_string(f.column) + ")");
}

struct Attribute {
    std::string name;
    bool nominal = false;
    std::vector<std::string> domain;
};

Attribute parse_attribute(std::string_view rest, std::size_t line, std::size_t column) {
    rest = trim(rest);
    Attribute attr;
    std::size_t name_end = 0;
    if (!rest.empty() && (rest.front() == '\'' || rest.front() == '"')) {
        const auto close = rest.find(rest.front(), 1);
        if (close == std::string_view::npos) {
            throw ParseError("unterminated attribute name", line, column);
        }
        attr.name = std::string(rest.substr(1, close - 1));
        name_end = close + 1;
    } else {
        while (name_end < rest.size() && !std::isspace(static_cast<unsigned char>(rest[name_end]))) {
            ++name_end;
        }
        attr.name = std::string(rest.substr(0, name_end));
    }
    const std::string_view type = trim(rest.substr(name_end));
    if (attr.name.empty() || type.empty()) {
        throw ParseError("attribute needs a name and a type", line, column);
    }
    if (type.front() == '{') {
        if (type.back() != '}') {
            throw ParseError("unterminated nominal domain", line, column);
        }
        attr.nominal = true;
        for (const auto& f : split_fields(type.substr(1, type.size() - 2), ',', 0)) {
            attr.domain.emplace_back(unquote(f.text));
        }
        return attr;
    }
    const std::string t = lower(type);
    if (t != "numeric" && t != "real" && t != "integer") {
        throw ParseError("unsupported attribute type '" + std::string(type) + "'", line, column);
    }
    return attr;
}

LabeledDataset assemble(std::vector<double>&& features, std::vector<std::uint8_t>&& labels,
                        Index rows, Index p, Index k, std::vector<std::string> names) {
    if (rows == 0) {
        throw InvalidInput("dataset has no samples");
    }
    Matrix x(rows, p);
    LabelMatrix y(rows, k);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < p; ++j) {
            x(i, j) = features[static_cast<std::size_t>(i * p + j)];
        }
        for (Index j = 0; j < k; ++j) {
            y(i, j) = labels[static_cast<std::size_t>(i * k + j)];
        }
    }
    return LabeledDataset(std::move(x), std::move(y), std::move(names));
}

} // namespace

DatasetFormat format_for_path(const std::string& path) {
    const auto dot = path.rfind('.');
    if (dot != std::string::npos && lower(path.substr(dot)) == ".arff") {
        return DatasetFormat::ArffWithLabelCount;
    }
    return DatasetFormat::DelimitedSplit;
}

LabeledDataset read_arff(std::istream& in, Index label_count) {
    if (label_count < 1) {
        throw InvalidInput("ARFF input needs a positive label count");
    }
    std::vector<Attribute> attrs;
    bool in_data = false;
    Index p = 0;
    std::vector<double> features;
    std::vector<std::uint8_t> labels;
    std::vector<std::uint8_t> label_default;
    Index rows = 0;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') {
            raw.pop_back();
        }
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '%') {
            continue;
        }
        const std::size_t col = static_cast<std::size_t>(line.data() - raw.data()) + 1;
        if (!in_data) {
            if (line.front() != '@') {
                throw ParseError("expected a header directive", line_no, col);
            }
            const auto space = line.find_first_of(" \t");
            const std::string keyword = lower(line.substr(0, space));
            const std::string_view rest =
                space == std::string_view::npos ? std::string_view{} : line.substr(space);
            if (keyword == "@relation") {
                continue;
            }
            if (keyword == "@attribute") {
                attrs.push_back(parse_attribute(rest, line_no, col));
                continue;
            }
            if (keyword == "@data") {
                if (!trim(rest).empty()) {
                    throw ParseError("unexpected text after @data", line_no, col);
                }
                const auto total = static_cast<Index>(attrs.size());
                if (total < label_count) {
                    throw InvalidInput("ARFF header declares " + std::to_string(total) +
                                       " attributes but " + std::to_string(label_count) +
                                       " labels were requested");
                }
                p = total - label_count;
                if (p == 0) {
                    throw InvalidInput("ARFF file has an empty feature section");
                }
                for (Index j = 0; j < p; ++j) {
                    if (attrs[static_cast<std::size_t>(j)].nominal) {
                        throw InvalidInput("nominal feature attribute '" +
                                           attrs[static_cast<std::size_t>(j)].name +
                                           "' is not supported");
                    }
                }
                for (Index j = p; j < total; ++j) {
                    const Attribute& a = attrs[static_cast<std::size_t>(j)];
                    if (a.nominal && a.domain.size() != 2) {
                        throw InvalidInput("label attribute '" + a.name +
                                           "' must have a two-value domain");
                    }
                    label_default.push_back(
                        a.nominal ? parse_label({a.domain.front(), 0}, line_no) : 0);
                }
                in_data = true;
                continue;
            }
            throw ParseError("unknown directive '" + keyword + "'", line_no, col);
        }

        const auto total = static_cast<Index>(attrs.size());
        std::vector<double> frow(static_cast<std::size_t>(p), 0.0);
        std::vector<std::uint8_t> lrow = label_default;
        if (line.front() == '{') {
            if (line.back() != '}') {
                throw ParseError("unterminated sparse row", line_no, col);
            }
            std::vector<bool> seen(static_cast<std::size_t>(total), false);
            const auto inner = line.substr(1, line.size() - 2);
            if (!trim(inner).empty()) {
                for (const auto& f : split_fields(inner, ',', col + 1)) {
                    const auto gap = f.text.find_first_of(" \t");
                    if (gap == std::string_view::npos) {
                        throw ParseError("sparse entry needs an index and a value", line_no,
                                         f.column);
                    }
                    const Field idx_field{f.text.substr(0, gap), f.column};
                    const Field val_field{trim(f.text.substr(gap)),
                                          f.column + f.text.find_first_not_of(" \t", gap)};
                    Index idx = 0;
                    const auto* end = idx_field.text.data() + idx_field.text.size();
                    const auto [ptr, ec] = std::from_chars(idx_field.text.data(), end, idx);
                    if (ec != std::errc() || ptr != end || idx < 0 || idx >= total) {
                        throw ParseError("bad sparse index '" + std::string(idx_field.text) + "'",
                                         line_no, idx_field.column);
                    }
                    if (seen[static_cast<std::size_t>(idx)]) {
                        throw ParseError("duplicate sparse index", line_no, idx_field.column);
                    }
                    seen[static_cast<std::size_t>(idx)] = true;
                    if (idx < p) {
                        frow[static_cast<std::size_t>(idx)] = parse_real(val_field, line_no);
                    } else {
                        lrow[static_cast<std::size_t>(idx - p)] = parse_label(val_field, line_no);
                    }
                }
            }
        } else {
            const auto fields = split_fields(line, ',', col);
            if (static_cast<Index>(fields.size()) != total) {
                const std::size_t where =
                    static_cast<Index>(fields.size()) > total
                        ? fields[static_cast<std::size_t>(total)].column
                        : col + line.size();
                throw ParseError("row has " + std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(total),
                                 line_no, where);
            }
            for (Index j = 0; j < p; ++j) {
                frow[static_cast<std::size_t>(j)] = parse_real(fields[static_cast<std::size_t>(j)], line_no);
            }
            for (Index j = p; j < total; ++j) {
                lrow[static_cast<std::size_t>(j - p)] =
                    parse_label(fields[static_cast<std::size_t>(j)], line_no);
            }
        }
        features.insert(features.end(), frow.begin(), frow.end());
        labels.insert(labels.end(), lrow.begin(), lrow.end());
        ++rows;
    }
    if (!in_data) {
        throw InvalidInput("ARFF input has no @data section");
    }
    std::vector<std::string> names;
    for (Index j = p; j < static_cast<Index>(attrs.size()); ++j) {
        names.push_back(attrs[static_cast<std::size_t>(j)].name);
    }
    return assemble(std::move(features), std::move(labels), rows, p, label_count, std::move(names));
}

LabeledDataset read_delimited(std::istream& in, Index label_count) {
    if (label_count < 1) {
        throw InvalidInput("delimited input needs a positive label count");
    }
    std::vector<double> features;
    std::vector<std::uint8_t> labels;
    std::vector<std::string> names;
    Index width = -1;
    Index rows = 0;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') {
            raw.pop_back();
        }
        if (line_no == 1 && raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0) {
            raw.erase(0, 3);
        }
        if (trim(raw).empty()) {
            continue;
        }
        const auto fields = split_fields(raw, ',', 1);
        const auto count = static_cast<Index>(fields.size());
        if (width < 0) {
            const bool header = std::any_of(fields.begin(), fields.end(), [](const Field& f) {
                double v = 0.0;
                const auto t = unquote(f.text);
                const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
                return t.empty() || ec != std::errc() || ptr != t.data() + t.size();
            });
            width = count;
            if (width <= label_count) {
                throw InvalidInput("delimited input has " + std::to_string(width) +
                                   " columns; need features plus " + std::to_string(label_count) +
                                   " labels");
            }
            if (header) {
                for (Index j = width - label_count; j < width; ++j) {
                    names.emplace_back(unquote(fields[static_cast<std::size_t>(j)].text));
                }
                continue;
            }
        }
        if (count != width) {
            const std::size_t where =
                count > width ? fields[static_cast<std::size_t>(width)].column : raw.size() + 1;
            throw ParseError("row has " + std::to_string(count) + " fields, expected " +
                                 std::to_string(width),
                             line_no, where);
        }
        const Index p = width - label_count;
        for (Index j = 0; j < p; ++j) {
            features.push_back(parse_real(fields[static_cast<std::size_t>(j)], line_no));
        }
        for (Index j = p; j < width; ++j) {
            labels.push_back(parse_label(fields[static_cast<std::size_t>(j)], line_no));
        }
        ++rows;
    }
    if (width < 0) {
        throw InvalidInput("delimited input is empty");
    }
    return assemble(std::move(features), std::move(labels), rows, width - label_count, label_count,
                    std::move(names));
}

LabeledDataset read_dataset_file(const std::string& path, DatasetFormat format,
                                 Index label_count) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset '" + path + "'");
    }
    return format == DatasetFormat::ArffWithLabelCount ? read_arff(in, label_count)
                                                       : read_delimited(in, label_count);
}

void write_delimited(std::ostream& out, const LabeledDataset& ds) {
    const Index p = ds.features();
    for (Index j = 0; j < p; ++j) {
        out << (j == 0 ? "" : ",") << 'f' << (j + 1);
    }
    for (Index j = 0; j < ds.labels(); ++j) {
        out << ',';
        if (ds.label_names().empty()) {
            out << "label" << (j + 1);
        } else {
            out << ds.label_names()[static_cast<std::size_t>(j)];
        }
    }
    out << '\n';
    std::array<char, 32> buf{};
    for (Index i = 0; i < ds.samples(); ++i) {
        for (Index j = 0; j < p; ++j) {
            const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), ds.x()(i, j));
            (void)ec;
            if (j > 0) {
                out << ',';
            }
            out.write(buf.data(), ptr - buf.data());
        }
        for (Index j = 0; j < ds.labels(); ++j) {
            out << ',' << static_cast<int>(ds.y()(i, j));
        }
        out << '\n';
    }
}

void write_delimited_file(const std::string& path, const LabeledDataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    write_delimited(out, ds);
    if (!out) {
        throw IoError("failed while writing '" + path + "'");
    }
}

LabeledDataset normalized(const LabeledDataset& ds, const Normalization& transform) {
    return ds.with_features(transform.apply(ds.x()));
}

LoadedData load_dataset(const DatasetSource& src) {
    LabeledDataset train = read_dataset_file(src.train_path, src.format, src.label_count);
    const Normalization transform = Normalization::fit(train.x(), src.normalization);
    LoadedData out{normalized(train, transform), std::nullopt, transform};
    if (src.test_path) {
        LabeledDataset test = read_dataset_file(*src.test_path, src.format, src.label_count);
        if (test.features() != train.features()) {
            throw InvalidInput("test split has " + std::to_string(test.features()) +
                               " features, training split has " +
                               std::to_string(train.features()));
        }
        out.test = normalized(test, transform);
    }
    return out;
}

} // namespace sdgs
