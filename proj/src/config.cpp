#include "hazeforge/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace hazeforge {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw config_error("expected a boolean, got '" + s + "'");
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

ConfigField f_u64(const char* key, std::uint64_t RunConfig::* member) {
    return {key,
            [member](const RunConfig& c) { return std::to_string(c.*member); },
            [member, key = std::string(key)](RunConfig& c, const std::string& v) {
                try {
                    c.*member = std::stoull(v);
                } catch (...) {
                    throw config_error(key + ": expected an unsigned integer, got '" + v + "'");
                }
            }};
}

ConfigField f_int(const char* key, int RunConfig::* member) {
    return {key,
            [member](const RunConfig& c) { return std::to_string(c.*member); },
            [member, key = std::string(key)](RunConfig& c, const std::string& v) {
                try {
                    c.*member = std::stoi(v);
                } catch (...) {
                    throw config_error(key + ": expected an integer, got '" + v + "'");
                }
            }};
}

ConfigField f_double(const char* key, double RunConfig::* member) {
    return {key,
            [member](const RunConfig& c) { return fmt_double(c.*member); },
            [member, key = std::string(key)](RunConfig& c, const std::string& v) {
                try {
                    c.*member = std::stod(v);
                } catch (...) {
                    throw config_error(key + ": expected a number, got '" + v + "'");
                }
            }};
}

ConfigField f_bool(const char* key, bool RunConfig::* member) {
    return {key,
            [member](const RunConfig& c) { return c.*member ? "true" : "false"; },
            [member](RunConfig& c, const std::string& v) { c.*member = parse_bool(v); }};
}

ConfigField f_str(const char* key, std::string RunConfig::* member) {
    return {key,
            [member](const RunConfig& c) { return c.*member; },
            [member](RunConfig& c, const std::string& v) { c.*member = v; }};
}

}  // namespace

const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> fields = {
        f_u64("dataset.seed", &RunConfig::data_seed),
        f_int("dataset.scenes", &RunConfig::scenes),
        f_int("dataset.test_scenes", &RunConfig::test_scenes),
        f_int("dataset.draws", &RunConfig::draws),
        f_int("dataset.image_size", &RunConfig::image_size),
        f_double("dataset.a_min", &RunConfig::a_min),
        f_double("dataset.a_max", &RunConfig::a_max),
        f_double("dataset.beta_min", &RunConfig::beta_min),
        f_double("dataset.beta_max", &RunConfig::beta_max),
        f_bool("dataset.per_channel_a", &RunConfig::per_channel_a),
        f_str("dataset.source", &RunConfig::source),
        f_str("dataset.source_dir", &RunConfig::source_dir),
        f_double("network.scale", &RunConfig::scale),
        f_int("network.depth", &RunConfig::depth),
        f_bool("network.disc_condition_hazy", &RunConfig::disc_condition_hazy),
        f_str("loss.preset", &RunConfig::preset),
        f_double("loss.lambda_a", &RunConfig::lambda_a),
        f_double("loss.lambda_g", &RunConfig::lambda_g),
        f_double("loss.lambda_p", &RunConfig::lambda_p),
        f_bool("loss.raw_sums", &RunConfig::raw_sums),
        f_u64("train.seed", &RunConfig::train_seed),
        f_int("train.batch_size", &RunConfig::batch_size),
        f_int("train.stage1_iters", &RunConfig::stage1_iters),
        f_int("train.stage2_iters", &RunConfig::stage2_iters),
        f_double("train.lr", &RunConfig::lr),
        f_double("train.beta1", &RunConfig::beta1),
        f_double("train.beta2", &RunConfig::beta2),
        f_double("train.adam_eps", &RunConfig::adam_eps),
        f_double("train.stage2_t_weight", &RunConfig::stage2_t_weight),
        f_int("train.d_steps", &RunConfig::d_steps),
        f_str("paths.data_dir", &RunConfig::data_dir),
        f_str("paths.out_dir", &RunConfig::out_dir),
    };
    return fields;
}

void apply_override(RunConfig& cfg, const std::string& key_eq_value) {
    auto eq = key_eq_value.find('=');
    if (eq == std::string::npos)
        throw config_error("override must look like section.key=value: " + key_eq_value);
    const std::string key = trim(key_eq_value.substr(0, eq));
    const std::string value = trim(key_eq_value.substr(eq + 1));
    for (const auto& f : config_fields()) {
        if (f.key == key) {
            f.set(cfg, value);
            return;
        }
    }
    throw config_error("unknown config key: " + key);
}

static void apply_config_stream(RunConfig& cfg, std::istream& in, const std::string& what) {
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error(what + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (section.empty())
            throw config_error(what + ":" + std::to_string(lineno) + ": key outside any [section]");
        apply_override(cfg, section + "." + key + "=" + value);
    }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open config: " + path);
    apply_config_stream(cfg, f, path);
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream os;
    std::string section;
    for (const auto& f : config_fields()) {
        const std::string sec = f.key.substr(0, f.key.find('.'));
        const std::string key = f.key.substr(f.key.find('.') + 1);
        if (sec != section) {
            if (!section.empty()) os << "\n";
            os << "[" << sec << "]\n";
            section = sec;
        }
        os << key << " = " << f.get(cfg) << "\n";
    }
    return os.str();
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    apply_config_stream(cfg, in, "<string>");
    return cfg;
}

std::string config_fingerprint(const RunConfig& cfg) {
    const std::string s = serialize_config(cfg);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hazeforge
