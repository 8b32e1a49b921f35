#pragma once

#include <filesystem>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace flexpos {

/// Flat `key = value` configuration with dotted section names. Lines starting
/// with '#' are comments. Reads are tracked so unknown keys can be reported.
class Config {
public:
    Config() = default;

    static Config parse(std::string_view text, std::string source = "<string>");
    static Config load(const std::filesystem::path& path);

    /// Applies a `key=value` override (command-line flags).
    void apply_override(std::string_view assignment);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    std::optional<std::string> find(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated list, items trimmed.
    std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;
    /// Relative paths resolve against the directory of the loaded file.
    std::filesystem::path get_path(const std::string& key, const std::filesystem::path& fallback = {}) const;

    /// Keys that were set but never read.
    std::vector<std::string> unused_keys() const;
    const std::map<std::string, std::string>& entries() const noexcept { return values_; }
    const std::string& source() const noexcept { return source_; }

private:
    std::string source_ = "<config>";
    std::filesystem::path base_dir_;
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

}  // namespace flexpos
