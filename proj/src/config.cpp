#include "twotrap/config.hpp"

#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace twotrap {

namespace {

using nlohmann::json;

class Reader {
public:
    Reader(const json& obj, std::string path, bool strict) : obj_(obj), path_(std::move(path)), strict_(strict) {
        if (!obj_.is_object()) throw ConfigError(where() + "must be an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key);
    }

    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!obj_.contains(key)) throw ConfigError("missing field '" + qualified(key) + "'");
        return obj_.at(key);
    }

    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    double number(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number()) throw ConfigError("field '" + qualified(key) + "' must be a number");
        return v.get<double>();
    }

    std::uint64_t count(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
            throw ConfigError("field '" + qualified(key) + "' must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::string text(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_string()) throw ConfigError("field '" + qualified(key) + "' must be a string");
        return v.get<std::string>();
    }

    bool flag(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        if (!v.is_boolean()) throw ConfigError("field '" + qualified(key) + "' must be a boolean");
        return v.get<bool>();
    }

    Reader child(const std::string& key) { return Reader(at(key), qualified(key), strict_); }

    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        if (!strict_) return;
        for (const auto& [key, value] : obj_.items()) {
            if (seen_.count(key) == 0) throw ConfigError("unknown key '" + qualified(key) + "'");
        }
    }

private:
    std::string where() const { return path_.empty() ? "config " : "field '" + path_ + "' "; }

    const json& obj_;
    std::string path_;
    bool strict_;
    std::set<std::string> seen_;
};

void read_trap(Reader r, TrapConfig& t, const std::string& name) {
    t.wavelength = r.number("wavelength", t.wavelength);
    t.waist = r.number("waist", t.waist);
    t.depth = r.number("depth", t.depth);
    if (r.has("axis")) {
        const auto axis = r.text("axis");
        if (axis == "y") {
            t.axis = Axis::y;
        } else if (axis == "z") {
            t.axis = Axis::z;
        } else {
            throw ConfigError("field '" + r.qualified("axis") + "' must be \"y\" or \"z\"");
        }
    }
    t.axial_phase_offset = r.number("axial_phase_offset", t.axial_phase_offset);
    if (r.has("transverse_center")) {
        const auto& v = r.at("transverse_center");
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            throw ConfigError("field '" + r.qualified("transverse_center") + "' must be an array of two numbers");
        }
        t.transverse_center = {v[0].get<double>(), v[1].get<double>()};
    }
    r.finish();
    try {
        validate(t, "traps." + name);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

void read_noise(Reader r, NoiseModel& n) {
    n.transport_rms = r.number("transport_rms", n.transport_rms);
    n.insert_rms = r.number("insert_rms", n.insert_rms);
    n.distance_meas_rms = r.number("distance_meas_rms", n.distance_meas_rms);
    n.position_meas_rms = r.number("position_meas_rms", n.position_meas_rms);
    n.radial_placement_rms = r.number("radial_placement_rms", n.radial_placement_rms);
    n.loss_prob_atom1 = r.number("loss_prob_atom1", n.loss_prob_atom1);
    n.loss_prob_atom2 = r.number("loss_prob_atom2", n.loss_prob_atom2);
    n.storage_lifetime_hdt = r.number("storage_lifetime_hdt", n.storage_lifetime_hdt);
    n.storage_lifetime_vdt = r.number("storage_lifetime_vdt", n.storage_lifetime_vdt);
    n.molasses_lifetime = r.number("molasses_lifetime", n.molasses_lifetime);
    n.pair_collision_rate = r.number("pair_collision_rate", n.pair_collision_rate);
    n.pair_loss_branching = r.number("pair_loss_branching", n.pair_loss_branching);
    n.lifetime_losses = r.flag("lifetime_losses", n.lifetime_losses);
    r.finish();
    try {
        validate(n);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

void read_analysis(Reader r, AnalysisSettings& a) {
    a.confidence = r.number("confidence", a.confidence);
    a.coarse_bin = r.number("coarse_bin", a.coarse_bin);
    a.fine_bin = r.number("fine_bin", a.fine_bin);
    a.width_error = r.number("width_error", a.width_error);
    a.noloss_error = r.number("noloss_error", a.noloss_error);
    r.finish();
    if (!(a.confidence > 0.0 && a.confidence < 1.0)) throw ConfigError("analysis.confidence must be in (0, 1)");
    if (!(a.coarse_bin > 0.0) || !(a.fine_bin > 0.0)) throw ConfigError("analysis bin widths must be > 0");
    if (!(a.width_error >= 0.0) || !(a.noloss_error >= 0.0)) throw ConfigError("analysis errors must be >= 0");
}

void read_fluorescence(Reader r, FluorescenceSettings& f) {
    if (r.has("mean_atoms")) {
        const auto& v = r.at("mean_atoms");
        if (!v.is_array() || v.empty()) throw ConfigError("field 'fluorescence.mean_atoms' must be a non-empty array");
        f.mean_atoms.clear();
        for (const auto& m : v) {
            if (!m.is_number() || m.get<double>() < 0.0 || m.get<double>() > 700.0) {
                throw ConfigError("field 'fluorescence.mean_atoms' entries must be numbers in [0, 700]");
            }
            f.mean_atoms.push_back(m.get<double>());
        }
    }
    if (r.has("wells")) f.wells = static_cast<long>(r.count("wells"));
    if (r.has("shots")) f.shots = static_cast<long>(r.count("shots"));
    if (r.has("placement")) {
        const auto p = r.text("placement");
        if (p == "uniform") {
            f.placement = Placement::uniform;
        } else if (p == "distinct") {
            f.placement = Placement::distinct;
        } else {
            throw ConfigError("field 'fluorescence.placement' must be \"uniform\" or \"distinct\"");
        }
    }
    f.fluorescence_per_atom = r.number("fluorescence_per_atom", f.fluorescence_per_atom);
    f.background_level = r.number("background_level", f.background_level);
    f.protocol.molasses_on = r.number("molasses_on", f.protocol.molasses_on);
    f.protocol.switch_off = r.number("switch_off", f.protocol.switch_off);
    f.protocol.end = r.number("end", f.protocol.end);
    f.protocol.bin_width = r.number("bin_width", f.protocol.bin_width);
    r.finish();
    if (f.wells < 1) throw ConfigError("fluorescence.wells must be >= 1");
    if (f.shots < 1) throw ConfigError("fluorescence.shots must be >= 1");
    if (!(f.fluorescence_per_atom >= 0.0)) throw ConfigError("fluorescence.fluorescence_per_atom must be >= 0");
    if (!(f.background_level >= 0.0)) throw ConfigError("fluorescence.background_level must be >= 0");
    try {
        validate(f.protocol);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

void reload_sequence(ExperimentConfig& cfg, const std::string& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("sequence file '" + path + "' does not exist");
    cfg.sequence_path = path;
    try {
        cfg.sequence = load_sequence_file(path);
    } catch (const ParseError& e) {
        throw ConfigError(path + ": " + e.what());
    } catch (const RangeError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (cfg.sequence.steps.empty() || !std::holds_alternative<step::LoadAtoms>(cfg.sequence.steps.front())) {
        throw ConfigError(path + ": sequence must start with load_atoms");
    }
}

ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir, bool strict) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    Reader root(doc, "", strict);
    ExperimentConfig cfg;

    const auto version = root.count("schema_version");
    if (version != static_cast<std::uint64_t>(kSchemaVersion)) {
        throw ConfigError("unsupported schema_version " + std::to_string(version));
    }
    if (root.has("master_seed")) {
        cfg.master_seed = root.count("master_seed");
    } else if (strict) {
        throw ConfigError("missing field 'master_seed' (required for reproducibility)");
    }
    cfg.trials = root.count("trials");
    if (cfg.trials < 1) throw ConfigError("field 'trials' must be >= 1");
    cfg.post_selection_min_separation = root.number("post_selection_min_separation", cfg.post_selection_min_separation);
    if (!(cfg.post_selection_min_separation >= 0.0)) throw ConfigError("post_selection_min_separation must be >= 0");
    if (root.has("outputs")) cfg.outputs = root.text("outputs");

    if (root.has("traps")) {
        Reader traps = root.child("traps");
        if (traps.has("hdt")) read_trap(traps.child("hdt"), cfg.hdt, "hdt");
        if (traps.has("vdt")) read_trap(traps.child("vdt"), cfg.vdt, "vdt");
        traps.finish();
    }
    if (cfg.hdt.axis != Axis::y) throw ConfigError("traps.hdt.axis must be \"y\"");
    if (cfg.vdt.axis != Axis::z) throw ConfigError("traps.vdt.axis must be \"z\"");
    if (root.has("noise")) read_noise(root.child("noise"), cfg.noise);
    if (root.has("analysis")) read_analysis(root.child("analysis"), cfg.analysis);
    if (root.has("fluorescence")) read_fluorescence(root.child("fluorescence"), cfg.fluorescence);

    const auto seq = root.text("sequence_path");
    root.finish();

    std::filesystem::path p(seq);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    if (!std::filesystem::path(cfg.outputs).is_absolute()) {
        cfg.outputs = (std::filesystem::path(base_dir) / cfg.outputs).lexically_normal().string();
    }
    reload_sequence(cfg, p.lexically_normal().string());
    return cfg;
}

ExperimentConfig load_config(const std::string& path, bool strict) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path().string();
    return parse_config(buf.str(), dir.empty() ? "." : dir, strict);
}

MolassesEpisode fluorescence_episode(const ExperimentConfig& cfg) {
    MolassesEpisode ep;
    const auto& p = cfg.fluorescence.protocol;
    ep.duration = p.switch_off - p.molasses_on;
    ep.pair_collision_rate = cfg.noise.pair_collision_rate;
    ep.single_survival_lifetime = cfg.noise.molasses_lifetime;
    ep.pair_loss_branching = cfg.noise.pair_loss_branching;
    ep.fluorescence_per_atom = cfg.fluorescence.fluorescence_per_atom;
    ep.background_level = cfg.fluorescence.background_level;
    return ep;
}

}  // namespace twotrap
