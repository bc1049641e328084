#include "fsa/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fsa {
namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool valid_key(std::string_view k) {
    if (k.empty()) return false;
    for (char c : k) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = value.find(',', start);
        parts.push_back(trim(std::string_view(value).substr(
            start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return parts;
}

long parse_long(const std::string& key, const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(text.c_str(), &end, 10);
    if (errno != 0 || end == text.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': expected integer, got '" + text + "'");
    return v;
}

double parse_double(const std::string& key, const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (errno != 0 || end == text.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': expected number, got '" + text + "'");
    return v;
}

}  // namespace

Config Config::from_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (!valid_key(key))
            throw ConfigError("config line " + std::to_string(line_no) + ": bad key '" + key + "'");
        if (value.empty())
            throw ConfigError("config key '" + key + "': empty value");
        if (!cfg.kv_.emplace(key, value).second)
            throw ConfigError("duplicate config key '" + key + "'");
    }
    return cfg;
}

Config Config::from_file(const std::string& path) {
    std::ifstream f(path, std::ios::in | std::ios::binary);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_string(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
    if (!valid_key(key)) throw ConfigError("bad config key '" + key + "'");
    const std::string v = trim(value);
    if (v.empty()) throw ConfigError("config key '" + key + "': empty value");
    kv_[key] = v;
}

void Config::apply_override(const std::string& spec) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value, got '" + spec + "'");
    set(trim(std::string_view(spec).substr(0, eq)), std::string(spec.substr(eq + 1)));
}

void Config::merge_from(const Config& other) {
    for (const auto& [k, v] : other.kv_) kv_[k] = v;
}

std::string Config::get_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing required config key '" + key + "'");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

long Config::get_long(const std::string& key) const { return parse_long(key, get_string(key)); }

long Config::get_long(const std::string& key, long fallback) const {
    return has(key) ? get_long(key) : fallback;
}

double Config::get_double(const std::string& key) const {
    return parse_double(key, get_string(key));
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

bool Config::get_bool(const std::string& key) const {
    const std::string v = get_string(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& part : split_list(get_string(key))) {
        if (part.empty()) throw ConfigError("config key '" + key + "': empty list element");
        out.push_back(parse_double(key, part));
    }
    return out;
}

std::vector<long> Config::get_longs(const std::string& key) const {
    std::vector<long> out;
    for (const std::string& part : split_list(get_string(key))) {
        if (part.empty()) throw ConfigError("config key '" + key + "': empty list element");
        out.push_back(parse_long(key, part));
    }
    return out;
}

std::vector<bool> Config::get_bools(const std::string& key) const {
    std::vector<bool> out;
    for (const std::string& part : split_list(get_string(key))) {
        if (part == "true" || part == "1")
            out.push_back(true);
        else if (part == "false" || part == "0")
            out.push_back(false);
        else
            throw ConfigError("config key '" + key + "': expected true/false list, got '" + part +
                              "'");
    }
    return out;
}

void Config::reject_unknown(const std::vector<std::string>& allowed) const {
    for (const auto& [k, v] : kv_) {
        bool known = false;
        for (const auto& a : allowed)
            if (k == a) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown config key '" + k + "'");
    }
}

std::string Config::canonical_text() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

namespace {

// Presets ship the exact setups the experiments are specified against;
// values are plain config text so `--preset X` and a hand-written file are
// interchangeable.
const std::pair<const char*, const char*> kPresets[] = {
    {"appendix-a-example",
     "objective = vee\n"
     "acceptance.kind = polynomial\n"
     "acceptance.tau = 1\n"
     "cooling.kind = power\n"
     "cooling.alpha = 0.33333333333333331\n"
     "cooling.scale = 1\n"
     "kernel.kind = uniform\n"
     "run.iterations = 20000\n"
     "run.record_every = 20\n"},
    {"fast-rate-13",
     "objective = vee\n"
     "acceptance.kind = polynomial\n"
     "acceptance.tau = 1\n"
     "cooling.kind = power\n"
     "cooling.alpha = 0.33333333333333331\n"
     "cooling.scale = 40\n"
     "kernel.kind = uniform\n"
     "rate.epsilons = 0.05\n"
     "rate.checkpoints = 100,178,316,562,1000,1778,3162,5623,10000,17783,31623,56234,100000\n"
     "rate.reps = 10000\n"
     "rate.fit_n_min = 100\n"
     "rate.fit_n_max = 100000\n"
     "rate.compare = false\n"},
    {"classical-rate",
     "objective = vee\n"
     "acceptance.kind = polynomial\n"
     "acceptance.tau = 1\n"
     "cooling.kind = power\n"
     "cooling.alpha = 0.33333333333333331\n"
     "cooling.scale = 40\n"
     "classical.beta0 = 1\n"
     "kernel.kind = uniform\n"
     "rate.epsilons = 0.05,0.1\n"
     "rate.checkpoints = 100,178,316,562,1000,1778,3162,5623,10000,17783,31623,56234,100000\n"
     "rate.reps = 10000\n"
     "rate.fit_n_min = 100\n"
     "rate.fit_n_max = 100000\n"
     "rate.compare = true\n"},
    {"paper-benchmark",
     "benchmark.T = 500\n"
     "benchmark.reps = 150\n"
     "benchmark.iterations = 5000\n"
     "benchmark.truth = 0.9,18,10,3.1622776601683795,1\n"},
    {"linear-gaussian",
     "pf.phi = 0.8\n"
     "pf.trans_std = 1\n"
     "pf.coeff = 1\n"
     "pf.obs_std = 0.5\n"
     "pf.init_mean = 0\n"
     "pf.init_std = 1\n"
     "pf.T = 50\n"
     "pf.particles = 100,1000,10000\n"
     "pf.seeds = 20\n"},
    {"compact-coupling",
     "couple.mode = grid\n"
     "couple.t = 10\n"
     "couple.n_values = 100,200,400\n"
     "couple.ratios = 1.1,1.25,1.5\n"
     "couple.reps = 200\n"},
};

}  // namespace

Config Config::preset(const std::string& name) {
    for (const auto& [preset_name, text] : kPresets)
        if (name == preset_name) return from_string(text);
    std::string known;
    for (const auto& [preset_name, text] : kPresets) {
        if (!known.empty()) known += ", ";
        known += preset_name;
    }
    throw ConfigError("unknown preset '" + name + "' (available: " + known + ")");
}

std::vector<std::string> Config::preset_names() {
    std::vector<std::string> out;
    for (const auto& [preset_name, text] : kPresets) out.push_back(preset_name);
    return out;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_metadata_json(const std::string& path, const std::string& command,
                         const std::string& preset, std::uint64_t seed, const Config& cfg) {
    nlohmann::ordered_json doc;
    doc["command"] = command;
    doc["preset"] = preset.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(preset);
    doc["seed"] = seed;
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(cfg.canonical_text())));
    doc["config_hash"] = hash;
    doc["library_version"] = kLibraryVersion;
    nlohmann::ordered_json entries = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg.entries()) entries[k] = v;
    doc["config"] = entries;

    std::ofstream out(path, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace fsa
