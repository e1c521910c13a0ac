#include "sabon/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sabon/artifacts.hpp"
#include "sabon/errors.hpp"
#include "sabon/hash.hpp"

namespace sabon {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

long long parse_int(const std::string& v, int line) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) fail(line, "expected an integer, got '" + v + "'");
    return out;
}

double parse_float(const std::string& v, int line) {
    double out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) fail(line, "expected a number, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& v, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(line, "expected true or false, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& v, int line) {
    std::vector<int> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) fail(line, "empty entry in integer list");
        out.push_back(static_cast<int>(parse_int(item, line)));
    }
    if (out.empty()) fail(line, "integer list is empty");
    return out;
}

int to_int(long long v, int line) {
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(line, "integer out of range");
    return static_cast<int>(v);
}

std::string join(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

struct Entry {
    std::string value;
    int line = 0;
};

using Setter = std::function<void(ExperimentConfig&, const std::string&, int)>;

// Every accepted key, with its parser. The value type is fixed per key.
const std::map<std::string, Setter>& schema() {
    static const std::map<std::string, Setter> table = {
        {"data.grid_side", [](ExperimentConfig& c, const std::string& v, int l) { c.train.grid_side = to_int(parse_int(v, l), l); }},
        {"data.order", [](ExperimentConfig& c, const std::string& v, int l) { c.train.order = to_int(parse_int(v, l), l); }},
        {"data.train_size", [](ExperimentConfig& c, const std::string& v, int l) { c.train.train_size = to_int(parse_int(v, l), l); }},
        {"data.validation_size", [](ExperimentConfig& c, const std::string& v, int l) { c.train.validation_size = to_int(parse_int(v, l), l); }},
        {"data.test_size", [](ExperimentConfig& c, const std::string& v, int l) { c.train.test_size = to_int(parse_int(v, l), l); }},
        {"data.k_step", [](ExperimentConfig& c, const std::string& v, int l) { c.train.k_step = to_int(parse_int(v, l), l); }},
        {"model.hidden", [](ExperimentConfig& c, const std::string& v, int l) { c.train.architecture.hidden = parse_int_list(v, l); }},
        {"model.basis_size", [](ExperimentConfig& c, const std::string& v, int l) { c.train.architecture.basis_size = to_int(parse_int(v, l), l); }},
        {"loss.beta1", [](ExperimentConfig& c, const std::string& v, int l) { c.train.loss.beta1 = parse_float(v, l); }},
        {"loss.beta2", [](ExperimentConfig& c, const std::string& v, int l) { c.train.loss.beta2 = parse_float(v, l); }},
        {"loss.beta3", [](ExperimentConfig& c, const std::string& v, int l) { c.train.loss.beta3 = parse_float(v, l); }},
        {"loss.beta_p1", [](ExperimentConfig& c, const std::string& v, int l) { c.train.loss.beta_p1 = parse_float(v, l); }},
        {"train.epochs", [](ExperimentConfig& c, const std::string& v, int l) { c.train.epochs = to_int(parse_int(v, l), l); }},
        {"train.learning_rate", [](ExperimentConfig& c, const std::string& v, int l) { c.train.learning_rate = parse_float(v, l); }},
        {"train.batch_size", [](ExperimentConfig& c, const std::string& v, int l) { c.train.batch_size = to_int(parse_int(v, l), l); }},
        {"train.validation_every", [](ExperimentConfig& c, const std::string& v, int l) { c.train.validation_every = to_int(parse_int(v, l), l); }},
        {"train.cosine_schedule", [](ExperimentConfig& c, const std::string& v, int l) { c.train.cosine_schedule = parse_bool(v, l); }},
        {"srb.modes", [](ExperimentConfig& c, const std::string& v, int l) { c.srb.modes = to_int(parse_int(v, l), l); }},
        {"srb.quad_side", [](ExperimentConfig& c, const std::string& v, int l) { c.srb.quad_side = to_int(parse_int(v, l), l); }},
        {"srb.analysis_side", [](ExperimentConfig& c, const std::string& v, int l) { c.srb.analysis_side = to_int(parse_int(v, l), l); }},
        {"srb.tolerance", [](ExperimentConfig& c, const std::string& v, int l) { c.srb.tolerance = parse_float(v, l); }},
        {"srb.max_iterations", [](ExperimentConfig& c, const std::string& v, int l) { c.srb.max_iterations = to_int(parse_int(v, l), l); }},
        {"baseline.per_dim", [](ExperimentConfig& c, const std::string& v, int l) { c.baseline.per_dim = to_int(parse_int(v, l), l); }},
        {"baseline.quad_side", [](ExperimentConfig& c, const std::string& v, int l) { c.baseline.quad_side = to_int(parse_int(v, l), l); }},
        {"baseline.analysis_side", [](ExperimentConfig& c, const std::string& v, int l) { c.baseline.analysis_side = to_int(parse_int(v, l), l); }},
    };
    return table;
}

void check(const ExperimentConfig& cfg) {
    validate(cfg.train);
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(cfg.srb.modes >= 2 && cfg.srb.modes % 2 == 0, "srb.modes must be even and >= 2");
    require(cfg.srb.quad_side >= cfg.srb.modes, "srb.quad_side must be at least srb.modes");
    require(cfg.srb.analysis_side >= cfg.srb.modes, "srb.analysis_side must be at least srb.modes");
    require(cfg.srb.tolerance > 0, "srb.tolerance must be positive");
    require(cfg.srb.max_iterations >= 1, "srb.max_iterations must be positive");
    require(cfg.baseline.per_dim >= 1, "baseline.per_dim must be positive");
    require(cfg.baseline.quad_side >= 2 && cfg.baseline.analysis_side >= 2, "baseline grids must have side >= 2");
}

} // namespace

MapDescriptor parse_map(const std::string& name) {
    if (name == "circle") return CircleRotation{};
    if (name == "cat") return PerturbedCat{};
    if (name == "conjugated-cat") return ConjugatedCat{};
    throw ConfigError("unknown map '" + name + "' (expected circle, cat or conjugated-cat)");
}

std::string scale_name(Scale s) { return s == Scale::Paper ? "paper" : "desk"; }

Scale parse_scale(const std::string& name) {
    if (name == "paper") return Scale::Paper;
    if (name == "desk") return Scale::Desk;
    throw ConfigError("unknown scale '" + name + "' (expected paper or desk)");
}

ExperimentConfig default_experiment(const MapDescriptor& map, Scale scale) {
    ExperimentConfig cfg;
    cfg.scale = scale;
    cfg.train = preset_for(map, scale);
    cfg.baseline.per_dim = std::holds_alternative<ConjugatedCat>(map) ? 26 : 18;
    return cfg;
}

ExperimentConfig parse_config(std::istream& in, std::optional<Scale> scale_override) {
    std::map<std::string, Entry> entries;
    std::string section;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) fail(line_no, "empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, "missing key");
        if (value.empty()) fail(line_no, "missing value for '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        if (entries.count(full)) fail(line_no, "duplicate key '" + full + "'");
        entries[full] = {value, line_no};
    }

    auto take = [&entries](const std::string& key) -> std::optional<Entry> {
        auto it = entries.find(key);
        if (it == entries.end()) return std::nullopt;
        Entry e = it->second;
        entries.erase(it);
        return e;
    };

    const auto schema_entry = take("schema");
    if (!schema_entry) throw ConfigError("config: missing top-level 'schema' key");
    if (parse_int(schema_entry->value, schema_entry->line) != kConfigSchema) {
        fail(schema_entry->line, "unsupported schema version " + schema_entry->value);
    }
    const auto map_entry = take("experiment.map");
    if (!map_entry) throw ConfigError("config: missing [experiment] map");
    MapDescriptor map;
    try {
        map = parse_map(map_entry->value);
    } catch (const ConfigError& e) {
        fail(map_entry->line, e.what());
    }
    Scale scale = Scale::Desk;
    if (const auto s = take("experiment.scale")) {
        try {
            scale = parse_scale(s->value);
        } catch (const ConfigError& e) {
            fail(s->line, e.what());
        }
    }
    if (scale_override) scale = *scale_override;

    ExperimentConfig cfg = default_experiment(map, scale);
    if (const auto s = take("experiment.seed")) {
        const long long seed = parse_int(s->value, s->line);
        if (seed < 0) fail(s->line, "seed must be non-negative");
        cfg.train.seed = static_cast<std::uint64_t>(seed);
    }
    // Apply overrides in line order so error messages follow the file.
    std::vector<std::pair<std::string, Entry>> rest(entries.begin(), entries.end());
    std::sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.second.line < b.second.line; });
    for (const auto& [key, entry] : rest) {
        auto it = schema().find(key);
        if (it == schema().end()) fail(entry.line, "unknown key '" + key + "'");
        it->second(cfg, entry.value, entry.line);
    }
    check(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path, std::optional<Scale> scale_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_config(in, scale_override);
}

std::string canonical_config(const ExperimentConfig& cfg) {
    const TrainConfig& t = cfg.train;
    std::ostringstream out;
    out << "schema = " << kConfigSchema << "\n\n";
    out << "[experiment]\n";
    out << "map = " << map_name(t.map) << "\n";
    out << "scale = " << scale_name(cfg.scale) << "\n";
    out << "seed = " << t.seed << "\n\n";
    out << "[data]\n";
    out << "grid_side = " << t.grid_side << "\n";
    out << "order = " << t.order << "\n";
    out << "train_size = " << t.train_size << "\n";
    out << "validation_size = " << t.validation_size << "\n";
    out << "test_size = " << t.test_size << "\n";
    out << "k_step = " << t.k_step << "\n\n";
    out << "[model]\n";
    out << "hidden = " << join(t.architecture.hidden) << "\n";
    out << "basis_size = " << t.architecture.basis_size << "\n\n";
    out << "[loss]\n";
    out << "beta1 = " << format_double(t.loss.beta1) << "\n";
    out << "beta2 = " << format_double(t.loss.beta2) << "\n";
    out << "beta3 = " << format_double(t.loss.beta3) << "\n";
    out << "beta_p1 = " << format_double(t.loss.beta_p1) << "\n\n";
    out << "[train]\n";
    out << "epochs = " << t.epochs << "\n";
    out << "learning_rate = " << format_double(t.learning_rate) << "\n";
    out << "batch_size = " << t.batch_size << "\n";
    out << "validation_every = " << t.validation_every << "\n";
    out << "cosine_schedule = " << (t.cosine_schedule ? "true" : "false") << "\n\n";
    out << "[srb]\n";
    out << "modes = " << cfg.srb.modes << "\n";
    out << "quad_side = " << cfg.srb.quad_side << "\n";
    out << "analysis_side = " << cfg.srb.analysis_side << "\n";
    out << "tolerance = " << format_double(cfg.srb.tolerance) << "\n";
    out << "max_iterations = " << cfg.srb.max_iterations << "\n\n";
    out << "[baseline]\n";
    out << "per_dim = " << cfg.baseline.per_dim << "\n";
    out << "quad_side = " << cfg.baseline.quad_side << "\n";
    out << "analysis_side = " << cfg.baseline.analysis_side << "\n";
    return out.str();
}

std::string config_hash(const ExperimentConfig& cfg) { return sha256_hex(canonical_config(cfg)); }

} // namespace sabon
