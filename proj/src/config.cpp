#include "flexpos/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "flexpos/errors.hpp"

namespace flexpos {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool valid_key(std::string_view key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    for (char ch : key) {
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.')) return false;
    }
    return true;
}

std::pair<std::string, std::string> split_assignment(std::string_view line, bool& ok) {
    const auto eq = line.find('=');
    ok = eq != std::string_view::npos;
    if (!ok) return {};
    return {trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

}  // namespace

Config Config::parse(std::string_view text, std::string source) {
    Config cfg;
    cfg.source_ = std::move(source);
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // Strip comments: whole-line or after whitespace.
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '#' && (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
                line.resize(i);
                break;
            }
        }
        const std::string body = trim(line);
        if (body.empty()) continue;
        bool ok = false;
        auto [key, value] = split_assignment(body, ok);
        if (!ok) throw ParseError(cfg.source_, line_no, "expected 'key = value'");
        if (!valid_key(key)) throw ParseError(cfg.source_, line_no, "invalid key '" + key + "'");
        if (cfg.values_.count(key)) throw ParseError(cfg.source_, line_no, "duplicate key '" + key + "'");
        cfg.values_[key] = value;
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    Config cfg = parse(buf.str(), path.string());
    cfg.base_dir_ = path.parent_path();
    return cfg;
}

void Config::apply_override(std::string_view assignment) {
    bool ok = false;
    auto [key, value] = split_assignment(assignment, ok);
    if (!ok) throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
    set(key, value);
}

void Config::set(const std::string& key, const std::string& value) {
    if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'");
    values_[key] = value;
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

std::optional<std::string> Config::find(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return find(key).value_or(fallback);
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    const char* begin = v->c_str();
    char* end = nullptr;
    errno = 0;
    const double d = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(d)) {
        throw ConfigError(source_ + ": key '" + key + "' expects a number, got '" + *v + "'");
    }
    return d;
}

int Config::get_int(const std::string& key, int fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    const char* begin = v->c_str();
    char* end = nullptr;
    errno = 0;
    const long n = std::strtol(begin, &end, 10);
    if (end == begin || *end != '\0' || errno == ERANGE || n < INT32_MIN || n > INT32_MAX) {
        throw ConfigError(source_ + ": key '" + key + "' expects an integer, got '" + *v + "'");
    }
    return static_cast<int>(n);
}

std::uint64_t Config::get_uint64(const std::string& key, std::uint64_t fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    const char* begin = v->c_str();
    char* end = nullptr;
    errno = 0;
    const unsigned long long n = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0' || errno == ERANGE || v->front() == '-') {
        throw ConfigError(source_ + ": key '" + key + "' expects a non-negative integer, got '" + *v + "'");
    }
    return n;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw ConfigError(source_ + ": key '" + key + "' expects true/false, got '" + *v + "'");
}

std::vector<std::string> Config::get_list(const std::string& key, const std::vector<std::string>& fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= v->size()) {
        const auto comma = v->find(',', start);
        const auto end = comma == std::string::npos ? v->size() : comma;
        auto item = trim(std::string_view(*v).substr(start, end - start));
        if (item.empty()) throw ConfigError(source_ + ": key '" + key + "' has an empty list item");
        items.push_back(std::move(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return items;
}

std::filesystem::path Config::get_path(const std::string& key, const std::filesystem::path& fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    std::filesystem::path p(*v);
    if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
    return p;
}

std::vector<std::string> Config::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
        if (!used_.count(k)) out.push_back(k);
    }
    return out;
}

}  // namespace flexpos
