#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flexpos::csv {

/// Shortest text that round-trips: 17 significant digits, '.' decimal point.
std::string format_double(double value);

/// RFC-4180 field quoting; fields without separators or quotes pass unchanged.
std::string quote(std::string_view field);

class Writer {
public:
    explicit Writer(const std::filesystem::path& path);

    void header(const std::vector<std::string>& names);
    void row(std::span<const double> values);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

/// Numeric CSV with a single header row, stored column-major.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    const std::vector<double>& column(std::string_view name) const;
};

Table read_numeric(const std::filesystem::path& path);

/// Two-column (time_s, value) signal files.
void write_signal(const std::filesystem::path& path, std::span<const double> values, double sample_rate);
std::vector<double> read_signal(const std::filesystem::path& path, double* sample_rate = nullptr);

}  // namespace flexpos::csv
