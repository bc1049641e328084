#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fsa {

inline constexpr const char* kLibraryVersion = "1.0.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat `key = value` configuration: '#' comments, one entry per line, dotted
// keys, comma-separated lists.  Values stay strings until a typed getter
// parses them, so merging layers (preset, file, command-line overrides) is
// plain key overwriting.
class Config {
  public:
    Config() = default;

    static Config from_string(const std::string& text);
    static Config from_file(const std::string& path);
    static Config preset(const std::string& name);
    static std::vector<std::string> preset_names();

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    void set(const std::string& key, const std::string& value);
    // "key=value" as passed on the command line
    void apply_override(const std::string& spec);
    // entries of `other` overwrite entries here
    void merge_from(const Config& other);

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    long get_long(const std::string& key) const;
    long get_long(const std::string& key, long fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<long> get_longs(const std::string& key) const;
    std::vector<bool> get_bools(const std::string& key) const;

    // Schema check: every present key must appear in `allowed`.
    void reject_unknown(const std::vector<std::string>& allowed) const;

    // Sorted "key = value" lines; the config-hash input.
    std::string canonical_text() const;
    const std::map<std::string, std::string>& entries() const { return kv_; }

  private:
    std::map<std::string, std::string> kv_;
};

std::uint64_t fnv1a64(std::string_view s);

// Reproducibility sidecar: command, preset, seed, config hash and the full
// key/value map.  Deliberately excludes thread count and output directory so
// the bytes depend only on (config, seed).
void write_metadata_json(const std::string& path, const std::string& command,
                         const std::string& preset, std::uint64_t seed, const Config& cfg);

}  // namespace fsa
