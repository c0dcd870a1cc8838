#include "config_io.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace predisso {

using nlohmann::json;

namespace {

json rational_to_json(const RationalFn& r) {
    return json{{"num", r.num}, {"den", r.den}};
}

RationalFn rational_from_json(const json& j) {
    RationalFn r;
    r.num = j.at("num").get<std::vector<double>>();
    r.den = j.at("den").get<std::vector<double>>();
    if (r.den.empty() || r.num.empty()) throw ConfigError("rational needs num and den lists");
    return r;
}

json potential_to_json(const PotentialSpec& p) {
    json j{{"kind", to_string(p.kind)}};
    if (!p.params.empty()) j["params"] = p.params;
    if (p.kind == PotentialKind::CustomRational) j["rational"] = rational_to_json(p.custom);
    return j;
}

PotentialSpec potential_from_json(const json& j, ChannelRole role) {
    PotentialSpec p;
    p.kind = potential_kind_from_string(j.at("kind").get<std::string>());
    p.role = role;
    if (j.contains("params")) p.params = j.at("params").get<std::vector<double>>();
    if (p.kind == PotentialKind::CustomRational) {
        if (!j.contains("rational"))
            throw ConfigError("custom_rational potential needs a 'rational' object");
        p.custom = rational_from_json(j.at("rational"));
    }
    p.as_rational();  // validates parameter counts
    return p;
}

const std::vector<std::string>& allowed_keys() {
    static const std::vector<std::string> keys = {
        "h",
        "epsilon1",
        "v1.kind", "v1.params", "v1.rational.num", "v1.rational.den",
        "v2.kind", "v2.params", "v2.rational.num", "v2.rational.den",
        "coupling.a.kind", "coupling.a.params", "coupling.a.rational.num",
        "coupling.a.rational.den",
        "coupling.b.kind", "coupling.b.params", "coupling.b.rational.num",
        "coupling.b.rational.den",
        "distortion.theta", "distortion.ramp_start", "distortion.ramp_width",
        "distortion.profile",
        "cutoff.window_center", "cutoff.window_half_width", "cutoff.margin", "cutoff.nu",
        "cutoff.track_levels", "cutoff.auto_margin",
        "grid.half_length", "grid.n_points",
    };
    return keys;
}

json parse_scalar(const std::string& value) {
    if (value == "true") return json(true);
    if (value == "false") return json(false);
    try {
        size_t pos = 0;
        if (value.find_first_of(".eE") == std::string::npos) {
            long long i = std::stoll(value, &pos);
            if (pos == value.size()) return json(i);
        }
        pos = 0;
        double d = std::stod(value, &pos);
        if (pos == value.size()) return json(d);
    } catch (...) {
    }
    return json(value);
}

}  // namespace

json config_to_json(const ModelConfig& cfg) {
    json j;
    j["schema"] = kConfigSchema;
    j["h"] = cfg.h;
    j["v1"] = potential_to_json(cfg.v1);
    j["v2"] = potential_to_json(cfg.v2);
    j["coupling"] = json{{"a", potential_to_json(cfg.coupling.a_coef)},
                         {"b", potential_to_json(cfg.coupling.b_coef)}};
    j["distortion"] = json{{"theta", cfg.distortion.theta},
                           {"ramp_start", cfg.distortion.ramp_start},
                           {"ramp_width", cfg.distortion.ramp_width},
                           {"profile", cfg.distortion.profile}};
    j["cutoff"] = json{{"window_center", cfg.cutoff.window_center},
                       {"window_half_width", cfg.cutoff.window_half_width},
                       {"margin", cfg.cutoff.margin},
                       {"nu", cfg.cutoff.nu},
                       {"track_levels", cfg.cutoff.track_levels},
                       {"auto_margin", cfg.cutoff.auto_margin}};
    j["grid"] = json{{"half_length", cfg.grid_request.half_length},
                     {"n_points", cfg.grid_request.n_points}};
    j["epsilon1"] = cfg.epsilon1;
    return j;
}

ModelConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.value("schema", std::string()) != kConfigSchema)
        throw ConfigError(std::string("config schema must be '") + kConfigSchema + "'");
    ModelConfig cfg;
    try {
        cfg.h = j.at("h").get<double>();
        cfg.v1 = potential_from_json(j.at("v1"), ChannelRole::Confining);
        cfg.v2 = potential_from_json(j.at("v2"), ChannelRole::Dissociative);
        if (j.contains("coupling")) {
            cfg.coupling.a_coef =
                potential_from_json(j.at("coupling").at("a"), ChannelRole::Coefficient);
            cfg.coupling.b_coef =
                potential_from_json(j.at("coupling").at("b"), ChannelRole::Coefficient);
        }
        if (j.contains("distortion")) {
            const json& d = j.at("distortion");
            cfg.distortion.theta = d.value("theta", cfg.distortion.theta);
            cfg.distortion.ramp_start = d.value("ramp_start", cfg.distortion.ramp_start);
            cfg.distortion.ramp_width = d.value("ramp_width", cfg.distortion.ramp_width);
            cfg.distortion.profile = d.value("profile", cfg.distortion.profile);
        }
        if (j.contains("cutoff")) {
            const json& c = j.at("cutoff");
            cfg.cutoff.window_center = c.value("window_center", cfg.cutoff.window_center);
            cfg.cutoff.window_half_width =
                c.value("window_half_width", cfg.cutoff.window_half_width);
            cfg.cutoff.margin = c.value("margin", cfg.cutoff.margin);
            cfg.cutoff.nu = c.value("nu", cfg.cutoff.nu);
            cfg.cutoff.track_levels = c.value("track_levels", cfg.cutoff.track_levels);
            cfg.cutoff.auto_margin = c.value("auto_margin", cfg.cutoff.auto_margin);
        }
        if (j.contains("grid")) {
            const json& g = j.at("grid");
            cfg.grid_request.half_length = g.value("half_length", cfg.grid_request.half_length);
            cfg.grid_request.n_points = g.value("n_points", cfg.grid_request.n_points);
        }
        cfg.epsilon1 = j.value("epsilon1", 0.0);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    cfg.validate_basic();
    return cfg;
}

ModelConfig config_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

ModelConfig config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_string(ss.str());
}

void apply_override(json& j, const std::string& key, const std::string& value) {
    const auto& keys = allowed_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
        throw ConfigError("unknown override key '" + key + "'");
    json* node = &j;
    size_t start = 0;
    std::string part;
    std::vector<std::string> parts;
    for (size_t i = 0; i <= key.size(); ++i) {
        if (i == key.size() || key[i] == '.') {
            parts.push_back(key.substr(start, i - start));
            start = i + 1;
        }
    }
    // config JSON nests coupling coefficients under coupling.a / coupling.b
    for (size_t i = 0; i + 1 < parts.size(); ++i) node = &((*node)[parts[i]]);
    const std::string& leaf = parts.back();
    if (leaf == "num" || leaf == "den" || leaf == "params") {
        json arr = json::parse(value, nullptr, false);
        if (!arr.is_array()) throw ConfigError("override '" + key + "' expects a JSON array");
        (*node)[leaf] = arr;
    } else {
        (*node)[leaf] = parse_scalar(value);
    }
}

std::string canonical_config_string(const ModelConfig& cfg) {
    // nlohmann::json sorts object keys, so this form is canonical.
    return config_to_json(cfg).dump();
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

std::string config_hash(const ModelConfig& cfg) {
    return fnv1a_hex(canonical_config_string(cfg));
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("IoError", "cannot write '" + tmp.string() + "'");
        out << content;
    }
    fs::rename(tmp, target);
}

}  // namespace predisso
