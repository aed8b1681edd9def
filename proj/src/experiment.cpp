#include "twotrap/experiment.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "twotrap/analysis.hpp"
#include "twotrap/collision.hpp"
#include "twotrap/ensemble.hpp"

namespace twotrap {

namespace {

using ojson = nlohmann::ordered_json;

// Stream families so control runs never reuse the main ensemble's draws.
constexpr std::uint64_t kControlAtom1 = 0x6a09e667f3bcc908ULL;
constexpr std::uint64_t kControlAtom2 = 0xbb67ae8584caa73bULL;

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson rate_json(const RateEstimate& r) {
    return ojson{{"point", r.point}, {"lower", r.lower}, {"upper", r.upper},
                 {"confidence", r.confidence}, {"k", r.k}, {"n", r.n}};
}

ojson noise_json(const NoiseModel& n) {
    return ojson{{"transport_rms", n.transport_rms},
                 {"insert_rms", n.insert_rms},
                 {"distance_meas_rms", n.distance_meas_rms},
                 {"position_meas_rms", n.position_meas_rms},
                 {"radial_placement_rms", n.radial_placement_rms},
                 {"loss_prob_atom1", n.loss_prob_atom1},
                 {"loss_prob_atom2", n.loss_prob_atom2},
                 {"storage_lifetime_hdt", n.storage_lifetime_hdt},
                 {"storage_lifetime_vdt", n.storage_lifetime_vdt},
                 {"molasses_lifetime", n.molasses_lifetime},
                 {"pair_collision_rate", n.pair_collision_rate},
                 {"pair_loss_branching", n.pair_loss_branching},
                 {"lifetime_losses", n.lifetime_losses}};
}

ojson histogram_json(const Histogram& h) {
    return ojson{{"origin", h.origin}, {"bin_width", h.bin_width}, {"underflow", h.underflow}, {"counts", h.counts}};
}

ojson fit_json(const CombFit& f) {
    return ojson{{"center", number_or_null(f.center)},
                 {"center_err", number_or_null(f.center_err)},
                 {"envelope_width", number_or_null(f.envelope_width)},
                 {"envelope_width_err", number_or_null(f.envelope_width_err)},
                 {"peak_width", number_or_null(f.peak_width)},
                 {"peak_width_err", number_or_null(f.peak_width_err)},
                 {"period", f.period},
                 {"phase", number_or_null(f.phase)},
                 {"amplitude", number_or_null(f.amplitude)},
                 {"residual", number_or_null(f.residual)},
                 {"iterations", f.iterations},
                 {"converged", f.converged},
                 {"envelope_identifiable", f.envelope_identifiable},
                 {"peak_width_identifiable", f.peak_width_identifiable}};
}

ojson header(const ExperimentConfig& cfg, Mode mode) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["mode"] = to_string(mode);
    j["master_seed"] = cfg.master_seed;
    return j;
}

WorldState world_of(const ExperimentConfig& cfg) { return initial_world(cfg.hdt, cfg.vdt); }

ojson p_theor_json(const ExperimentConfig& cfg, double p_noloss) {
    const auto& n = cfg.noise;
    const double width = std::sqrt(2.0 * n.transport_rms * n.transport_rms + n.insert_rms * n.insert_rms);
    ojson j;
    j["delta_d_true"] = width;
    j["p_noloss"] = p_noloss;
    j["lambda_hdt"] = cfg.hdt.wavelength;
    if (width > 0.0) {
        j["value"] = p_theor(width, p_noloss, cfg.hdt.wavelength);
        const auto s = p_theor_sensitivity(width, p_noloss, cfg.hdt.wavelength, cfg.analysis.width_error,
                                           cfg.analysis.noloss_error);
        j["sensitivity"] = ojson{{"d_dwidth", s.d_dwidth},
                                 {"d_dnoloss", s.d_dnoloss},
                                 {"width_error", cfg.analysis.width_error},
                                 {"noloss_error", cfg.analysis.noloss_error},
                                 {"spread", s.spread}};
    } else {
        j["value"] = p_noloss;
    }
    return j;
}

std::vector<TrialRecord> main_ensemble(const ExperimentConfig& cfg) {
    TrialOptions opts;
    opts.post_selection_min_separation = cfg.post_selection_min_separation;
    return run_ensemble(cfg.sequence, world_of(cfg), cfg.noise, cfg.trials, cfg.master_seed, opts);
}

ojson sequence_json(const ExperimentConfig& cfg) {
    return ojson{{"name", cfg.sequence.name}, {"target_distance", cfg.sequence.target_distance},
                 {"steps", cfg.sequence.steps.size()}};
}

// Histograms, comb fit and deconvolved width of a final-distance sample.
void add_distance_analysis(ojson& j, const DistanceSample& finals, const ExperimentConfig& cfg) {
    const double period = cfg.hdt.well_spacing();
    const double meas = cfg.noise.distance_meas_rms;
    if (finals.values.empty()) {
        j["histograms"] = nullptr;
        j["comb_fit"] = nullptr;
        return;
    }
    const auto coarse = build_histogram(finals, cfg.analysis.coarse_bin);
    const auto fine = build_histogram(finals, cfg.analysis.fine_bin);
    j["histograms"] = ojson{{"coarse", histogram_json(coarse)}, {"fine", histogram_json(fine)}};
    try {
        const auto fit = fit_comb(fine, period);
        j["comb_fit"] = fit_json(fit);
        if (fit.envelope_identifiable && fit.envelope_width >= meas) {
            j["deconvolved_width"] = deconvolve_width(fit.envelope_width, meas);
        } else {
            j["deconvolved_width"] = nullptr;
        }
    } catch (const FitError& e) {
        j["comb_fit"] = ojson{{"error", e.what()}};
    }
}

Artifacts analyze(const ExperimentConfig& cfg) {
    if (cfg.distances_path.empty()) throw ConfigError("analyze mode needs a distance file (--distances)");
    const auto finals = load_distance_csv(cfg.distances_path);
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["mode"] = to_string(Mode::analyze);
    j["distances"] = std::filesystem::path(cfg.distances_path).filename().string();
    j["target_distance"] = cfg.sequence.target_distance;
    const auto stats = sample_stats(finals.values);
    j["final_distance"] = ojson{{"n", stats.n}, {"mean", number_or_null(stats.mean)}, {"std", number_or_null(stats.stddev)}};
    add_distance_analysis(j, finals, cfg);
    Artifacts out;
    out["summary.json"] = j.dump(2) + "\n";
    return out;
}

Artifacts rearrange(const ExperimentConfig& cfg) {
    const auto records = main_ensemble(cfg);
    const double period = cfg.hdt.well_spacing();
    const double target = cfg.sequence.target_distance;
    const double conf = cfg.analysis.confidence;

    ojson j = header(cfg, Mode::rearrange);
    j["sequence"] = sequence_json(cfg);
    j["trials"] = cfg.trials;
    j["noise"] = noise_json(cfg.noise);

    DistanceSample finals;
    std::size_t post = 0;
    for (const auto& r : records) {
        if (!r.post_selected) continue;
        ++post;
        if (std::isfinite(r.final_sep_measured)) finals.values.push_back(r.final_sep_measured);
    }
    j["post_selected"] = post;
    const auto& n = cfg.noise;
    j["error_budget"] = error_budget(n.transport_rms, n.insert_rms, n.distance_meas_rms);
    const auto stats = sample_stats(finals.values);
    j["final_distance"] = ojson{{"n", stats.n}, {"mean", number_or_null(stats.mean)}, {"std", number_or_null(stats.stddev)}};

    if (post > 0) {
        ojson rates;
        for (auto c : {SuccessCriterion::target_well, SuccessCriterion::within_one_well_of_target,
                       SuccessCriterion::pair_intact}) {
            rates[to_string(c)] = rate_json(success_rate(records, c, target, period, conf));
        }
        j["rates"] = rates;
    } else {
        j["rates"] = nullptr;
    }

    add_distance_analysis(j, finals, cfg);
    const auto loss = loss_algebra(n.loss_prob_atom1, n.loss_prob_atom2);
    j["p_theor"] = p_theor_json(cfg, loss.p_noloss);

    Artifacts out;
    out["trials.csv"] = trials_csv(records);
    out["summary.json"] = j.dump(2) + "\n";
    return out;
}

Artifacts join(const ExperimentConfig& cfg) {
    const auto records = main_ensemble(cfg);
    const double conf = cfg.analysis.confidence;
    const auto& n = cfg.noise;

    ojson j = header(cfg, Mode::join);
    j["sequence"] = sequence_json(cfg);
    j["trials"] = cfg.trials;
    j["noise"] = noise_json(n);

    std::size_t post = 0;
    for (const auto& r : records) post += r.post_selected ? 1 : 0;
    j["post_selected"] = post;

    // Single-atom controls measure the uncorrelated one-atom losses.
    const auto control = [&](int atom, std::uint64_t family) {
        TrialOptions opts;
        opts.post_selection_min_separation = cfg.post_selection_min_separation;
        opts.only_atom = atom;
        const auto recs = run_ensemble(cfg.sequence, world_of(cfg), n, cfg.trials, cfg.master_seed ^ family, opts);
        std::uint64_t k = 0;
        std::uint64_t total = 0;
        for (const auto& r : recs) {
            if (!r.post_selected) continue;
            ++total;
            const bool alive = atom == 1 ? r.alive_1 : r.alive_2;
            if (!alive) ++k;
        }
        return total > 0 ? binomial_ci(k, total, conf) : RateEstimate{};
    };
    const auto p1 = control(1, kControlAtom1);
    const auto p2 = control(2, kControlAtom2);
    j["controls"] = ojson{{"loss_atom1", rate_json(p1)}, {"loss_atom2", rate_json(p2)}};
    const auto measured_loss = loss_algebra(p1.point, p2.point);
    const auto configured_loss = loss_algebra(n.loss_prob_atom1, n.loss_prob_atom2);
    j["loss_algebra"] = ojson{
        {"configured", ojson{{"p_uncorr", configured_loss.p_uncorr}, {"p_noloss", configured_loss.p_noloss}}},
        {"measured", ojson{{"p_uncorr", measured_loss.p_uncorr}, {"p_noloss", measured_loss.p_noloss}}}};

    if (post > 0) {
        const auto same = success_rate(records, SuccessCriterion::same_well, 0.0, cfg.hdt.well_spacing(), conf);
        const auto lost = success_rate(records, SuccessCriterion::pair_lost, 0.0, cfg.hdt.well_spacing(), conf);
        j["rates"] = ojson{{"same_well", rate_json(same)}, {"p_meas", rate_json(lost)}};
        auto pt = p_theor_json(cfg, configured_loss.p_noloss);
        pt["monte_carlo_same_well"] = same.point;
        pt["difference"] = same.point - pt["value"].get<double>();
        j["p_theor"] = pt;
    } else {
        j["rates"] = nullptr;
        j["p_theor"] = p_theor_json(cfg, configured_loss.p_noloss);
    }

    Artifacts out;
    out["trials.csv"] = trials_csv(records);
    out["summary.json"] = j.dump(2) + "\n";
    return out;
}

std::string mean_label(double m) {
    std::string s = format_number(m);
    for (auto& c : s) {
        if (c == '.') c = 'p';
    }
    return s;
}

Artifacts fluorescence(const ExperimentConfig& cfg) {
    ojson j = header(cfg, Mode::fluorescence);
    const auto& f = cfg.fluorescence;
    const auto ep = fluorescence_episode(cfg);
    j["wells"] = f.wells;
    j["shots"] = f.shots;
    j["placement"] = f.placement == Placement::uniform ? "uniform" : "distinct";
    j["pair_collision_rate"] = ep.pair_collision_rate;
    j["molasses_on"] = f.protocol.molasses_on;
    j["switch_off"] = f.protocol.switch_off;

    Artifacts out;
    ojson traces = ojson::array();
    for (std::size_t i = 0; i < f.mean_atoms.size(); ++i) {
        FluorescenceStudy study;
        study.mean_atoms = f.mean_atoms[i];
        study.wells = f.wells;
        study.n_shots = f.shots;
        study.placement = f.placement;
        study.episode = ep;
        study.protocol = f.protocol;
        const auto trace = fluorescence_trace(study, cfg.master_seed + i);
        const std::string file = "trace_mean" + mean_label(f.mean_atoms[i]) + ".csv";
        out[file] = trace_csv(trace);

        // Lit level just after switch-on and just before switch-off.
        double first = std::nan("");
        double last = std::nan("");
        for (std::size_t b = 0; b < trace.time_bins.size(); ++b) {
            const auto [lo, hi] = trace.time_bins[b];
            if (lo >= f.protocol.molasses_on && hi <= f.protocol.switch_off) {
                if (std::isnan(first)) first = trace.mean_signal[b];
                last = trace.mean_signal[b];
            }
        }
        traces.push_back(ojson{{"mean_atoms", f.mean_atoms[i]},
                               {"file", file},
                               {"mean_initial_atoms", trace.mean_initial_atoms},
                               {"multi_occupancy_at_mean", expected_multi_occupancy(std::lround(f.mean_atoms[i]), f.wells)},
                               {"first_lit_bin", number_or_null(first)},
                               {"last_lit_bin", number_or_null(last)}});
    }
    j["traces"] = traces;
    out["summary.json"] = j.dump(2) + "\n";
    return out;
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string trials_csv(const std::vector<TrialRecord>& records) {
    std::string out = "trial_index,initial_sep,final_sep_measured,same_well,alive_1,alive_2,post_selected,well_sep\n";
    for (const auto& r : records) {
        out += std::to_string(r.trial_index);
        out += ',' + format_number(r.initial_sep);
        out += ',' + format_number(r.final_sep_measured);
        out += r.same_well ? ",1" : ",0";
        out += r.alive_1 ? ",1" : ",0";
        out += r.alive_2 ? ",1" : ",0";
        out += r.post_selected ? ",1" : ",0";
        out += ',';
        if (r.insert_valid) out += std::to_string(r.insert_well_sep);
        out += '\n';
    }
    return out;
}

std::string trace_csv(const FluorescenceTrace& trace) {
    std::string out = "t_start,t_end,mean_signal\n";
    for (std::size_t b = 0; b < trace.time_bins.size(); ++b) {
        out += format_number(trace.time_bins[b].first) + ',' + format_number(trace.time_bins[b].second) + ',' +
               format_number(trace.mean_signal[b]) + '\n';
    }
    return out;
}

Mode parse_mode(const std::string& name) {
    if (name == "rearrange") return Mode::rearrange;
    if (name == "join") return Mode::join;
    if (name == "fluorescence") return Mode::fluorescence;
    if (name == "analyze") return Mode::analyze;
    throw ConfigError("unknown mode '" + name + "' (expected rearrange, join, fluorescence or analyze)");
}

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::rearrange: return "rearrange";
        case Mode::join: return "join";
        case Mode::fluorescence: return "fluorescence";
        case Mode::analyze: return "analyze";
    }
    return "unknown";
}

Artifacts run_experiment(const ExperimentConfig& cfg, Mode mode) {
    switch (mode) {
        case Mode::rearrange: return rearrange(cfg);
        case Mode::join: return join(cfg);
        case Mode::fluorescence: return fluorescence(cfg);
        case Mode::analyze: return analyze(cfg);
    }
    return {};
}

void write_artifacts(const Artifacts& artifacts, const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<fs::path> written;
    try {
        fs::create_directories(dir);
        for (const auto& [name, content] : artifacts) {
            const fs::path p = fs::path(dir) / name;
            written.push_back(p);
            std::ofstream out(p, std::ios::binary | std::ios::trunc);
            out << content;
            out.close();
            if (!out) throw std::runtime_error("failed to write '" + p.string() + "'");
        }
    } catch (...) {
        std::error_code ec;
        for (const auto& p : written) fs::remove(p, ec);
        throw;
    }
}

}  // namespace twotrap
