#include "flexpos/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>

#include "flexpos/errors.hpp"

namespace flexpos::csv {

std::string format_double(double value) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(n));
}

std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

Writer::Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
}

void Writer::header(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out_ << ',';
        out_ << quote(names[i]);
    }
    out_ << "\r\n";
}

void Writer::row(std::span<const double> values) {
    std::string line;
    line.reserve(values.size() * 24);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) line += ',';
        line += format_double(values[i]);
    }
    line += "\r\n";
    out_ << line;
}

void Writer::close() {
    out_.close();
    if (!out_) throw IoError("failed writing " + path_.string());
}

const std::vector<double>& Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return columns[i];
    }
    throw IoError("CSV has no column '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace

Table read_numeric(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Table table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
            table.columns.resize(table.header.size());
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw ParseError(path.string(), line_no,
                             "expected " + std::to_string(table.header.size()) + " fields, found " +
                                 std::to_string(fields.size()));
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const char* begin = fields[i].c_str();
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(begin, &end);
            if (end == begin || *end != '\0') {
                throw ParseError(path.string(), line_no, "not a number: '" + fields[i] + "'");
            }
            table.columns[i].push_back(v);
        }
    }
    if (table.header.empty()) throw ParseError(path.string(), 1, "missing header row");
    return table;
}

void write_signal(const std::filesystem::path& path, std::span<const double> values, double sample_rate) {
    Writer w(path);
    w.header({"time_s", "value"});
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double row[2] = {static_cast<double>(i) / sample_rate, values[i]};
        w.row(row);
    }
    w.close();
}

std::vector<double> read_signal(const std::filesystem::path& path, double* sample_rate) {
    Table t = read_numeric(path);
    if (t.header.size() != 2) throw ParseError(path.string(), 1, "signal files have two columns (time_s, value)");
    if (sample_rate) {
        if (t.rows() < 2) throw ParseError(path.string(), 2, "need at least two samples to infer the rate");
        *sample_rate = static_cast<double>(t.rows() - 1) / (t.columns[0].back() - t.columns[0].front());
    }
    return t.columns[1];
}

}  // namespace flexpos::csv
