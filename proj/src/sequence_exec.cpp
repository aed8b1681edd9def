#include <algorithm>
#include <cmath>
#include <limits>

#include "twotrap/collision.hpp"
#include "twotrap/sequence.hpp"

namespace twotrap {

namespace {

Atom& select_alive(WorldState& state, int id, std::string_view step) {
    Atom* a = state.find(id);
    if (a == nullptr || !a->alive || !a->present) {
        throw StepError(StepError::Kind::no_alive_atom, std::string(step) + ": no alive atom " + std::to_string(id));
    }
    return *a;
}

void require_binding(const Atom& a, TrapId trap, std::string_view step) {
    if (a.bound_trap != trap) {
        throw StepError(StepError::Kind::incompatible_binding,
                        std::string(step) + ": atom " + std::to_string(a.id) + " is not held by the " + to_string(trap));
    }
}

void sync_hdt_atoms(WorldState& state) {
    for (auto& a : state.atoms) {
        if (!a.alive || a.bound_trap != TrapId::hdt) continue;
        a.position = {state.hdt_x(), state.hdt.well_center(a.well), state.hdt_z()};
    }
}

void sync_vdt_atoms(WorldState& state) {
    for (auto& a : state.atoms) {
        if (!a.alive || a.bound_trap != TrapId::vdt) continue;
        a.position[2] = state.vdt.well_center(a.well);
    }
}

// HDT atoms sitting in the overlap region follow the VDT's axial motion.
void capture_overlap(WorldState& state, const NoiseModel& noise, RngStream& stream, bool recenter) {
    for (auto& a : state.atoms) {
        if (!a.alive || a.bound_trap != TrapId::hdt || !state.in_overlap(a)) continue;
        a.bound_trap = TrapId::vdt;
        a.well = nearest_well(state.vdt, a.position[2], TrapId::vdt).index;
        if (recenter) a.position[0] = gaussian_draw(stream, state.vdt_x(), noise.radial_placement_rms);
    }
}

void storage_losses(WorldState& state, double duration, const NoiseModel& noise, RngStream& stream,
                    bool illuminated = false) {
    if (!noise.lifetime_losses) return;
    for (auto& a : state.atoms) {
        if (!a.alive) continue;
        double lifetime = noise.molasses_lifetime;
        if (!illuminated) lifetime = a.bound_trap == TrapId::vdt ? noise.storage_lifetime_vdt : noise.storage_lifetime_hdt;
        if (!exponential_survival(stream, duration, lifetime)) a.alive = false;
    }
}

Measurement take_image(const WorldState& state, const NoiseModel& noise, RngStream& stream) {
    Measurement m;
    m.time = state.clock;
    std::vector<const Atom*> visible;
    for (const auto& a : state.atoms) {
        if (a.alive && a.present) visible.push_back(&a);
    }
    std::sort(visible.begin(), visible.end(), [](const Atom* l, const Atom* r) { return l->id < r->id; });
    for (const Atom* a : visible) {
        m.positions.push_back({a->id, gaussian_draw(stream, a->position[1], noise.position_meas_rms)});
    }
    for (std::size_t i = 0; i < visible.size(); ++i) {
        for (std::size_t j = i + 1; j < visible.size(); ++j) {
            const double truth = visible[j]->position[1] - visible[i]->position[1];
            m.distances.push_back(
                {visible[i]->id, visible[j]->id, std::abs(gaussian_draw(stream, truth, noise.distance_meas_rms))});
        }
    }
    return m;
}

void load_atoms(WorldState& state, const step::LoadAtoms& s, RngStream& stream) {
    const double spacing = state.hdt.well_spacing();
    const auto lo = static_cast<long>(std::ceil(-s.spread / 2.0 / spacing));
    const auto hi = static_cast<long>(std::floor(s.spread / 2.0 / spacing));
    const long n_wells = hi - lo + 1;
    if (n_wells < s.count) {
        throw std::invalid_argument("load_atoms: spread of " + std::to_string(s.spread) + " um holds only " +
                                    std::to_string(std::max(n_wells, 0L)) + " wells");
    }
    // Partial Fisher-Yates: distinct wells, uniformly.
    std::vector<long> wells(static_cast<std::size_t>(n_wells));
    for (long i = 0; i < n_wells; ++i) wells[static_cast<std::size_t>(i)] = lo + i;
    for (int i = 0; i < s.count; ++i) {
        const auto j = i + stream.uniform_index(static_cast<std::uint64_t>(n_wells - i));
        std::swap(wells[static_cast<std::size_t>(i)], wells[j]);
    }
    std::vector<long> chosen(wells.begin(), wells.begin() + s.count);
    std::sort(chosen.begin(), chosen.end());

    state.atoms.clear();
    for (int i = 0; i < s.count; ++i) {
        Atom a;
        a.id = i + 1;
        a.bound_trap = TrapId::hdt;
        a.well = chosen[static_cast<std::size_t>(i)];
        state.atoms.push_back(a);
    }
    state.manipulation_losses_applied = false;
    sync_hdt_atoms(state);
}

}  // namespace

std::optional<double> Measurement::distance(int a, int b) const {
    for (const auto& d : distances) {
        if ((d.atom_a == a && d.atom_b == b) || (d.atom_a == b && d.atom_b == a)) return d.value;
    }
    return std::nullopt;
}

std::optional<Measurement> execute_step(WorldState& state, const Step& s, const NoiseModel& noise, RngStream& stream) {
    std::optional<Measurement> result;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, step::LoadAtoms>) {
                load_atoms(state, v, stream);
            } else if constexpr (std::is_same_v<T, step::Image>) {
                result = take_image(state, noise, stream);
                storage_losses(state, v.exposure, noise, stream, true);
                state.clock += v.exposure;
            } else if constexpr (std::is_same_v<T, step::TransportHDT>) {
                Atom& sel = select_alive(state, v.atom, "transport_hdt");
                require_binding(sel, TrapId::hdt, "transport_hdt");
                // The conveyor moves the whole lattice; every HDT atom keeps its well.
                state.hdt.axial_phase_offset += gaussian_draw(stream, v.target_y - sel.position[1], noise.transport_rms);
                sync_hdt_atoms(state);
                storage_losses(state, v.duration, noise, stream);
                state.clock += v.duration;
            } else if constexpr (std::is_same_v<T, step::ExtractVDT>) {
                Atom& sel = select_alive(state, v.atom, "extract_vdt");
                require_binding(sel, TrapId::hdt, "extract_vdt");
                if (state.vdt_scale <= 0.0) {
                    throw StepError(StepError::Kind::incompatible_binding, "extract_vdt: the VDT is switched off");
                }
                if (!state.in_overlap(sel)) {
                    throw StepError(StepError::Kind::incompatible_binding,
                                    "extract_vdt: atom " + std::to_string(sel.id) + " is outside the overlap region");
                }
                capture_overlap(state, noise, stream, true);
                state.vdt.axial_phase_offset += v.lift;
                sync_vdt_atoms(state);
                storage_losses(state, v.duration, noise, stream);
                state.clock += v.duration;
            } else if constexpr (std::is_same_v<T, step::TiltHDT>) {
                state.hdt.transverse_center[0] += gaussian_draw(stream, v.delta_x, noise.radial_placement_rms);
                sync_hdt_atoms(state);
                storage_losses(state, v.duration, noise, stream);
                state.clock += v.duration;
            } else if constexpr (std::is_same_v<T, step::TransportVDT>) {
                capture_overlap(state, noise, stream, false);
                state.vdt.axial_phase_offset +=
                    gaussian_draw(stream, v.target_z - state.vdt.axial_phase_offset, noise.radial_placement_rms);
                sync_vdt_atoms(state);
                storage_losses(state, v.duration, noise, stream);
                state.clock += v.duration;
            } else if constexpr (std::is_same_v<T, step::MergeRadial>) {
                state.hdt.transverse_center[0] = gaussian_draw(stream, state.vdt_x(), noise.radial_placement_rms);
                sync_hdt_atoms(state);
                storage_losses(state, v.duration, noise, stream);
                state.clock += v.duration;
            } else if constexpr (std::is_same_v<T, step::RampVDT>) {
                state.vdt_scale = v.final_scale;
                if (v.final_scale == 0.0) {
                    for (auto& a : state.atoms) {
                        if (!a.alive || a.bound_trap != TrapId::vdt) continue;
                        if (transverse_distance(state.hdt, a.position) >= state.hdt.waist) {
                            a.alive = false;  // no HDT to catch it
                            continue;
                        }
                        const double y = gaussian_draw(stream, a.position[1], noise.insert_rms);
                        a.bound_trap = TrapId::hdt;
                        a.well = nearest_well(state.hdt, y).index;
                    }
                    sync_hdt_atoms(state);
                    if (!state.manipulation_losses_applied) {
                        for (auto& a : state.atoms) {
                            if (!a.alive || (a.id != 1 && a.id != 2)) continue;
                            if (bernoulli_draw(stream, a.id == 1 ? noise.loss_prob_atom1 : noise.loss_prob_atom2)) {
                                a.alive = false;
                            }
                        }
                        state.manipulation_losses_applied = true;
                    }
                }
                storage_losses(state, v.duration, noise, stream);
                state.clock += v.duration;
            } else if constexpr (std::is_same_v<T, step::Molasses>) {
                MolassesEpisode ep;
                ep.duration = v.duration;
                ep.pair_collision_rate = noise.pair_collision_rate;
                ep.pair_loss_branching = noise.pair_loss_branching;
                ep.single_survival_lifetime =
                    noise.lifetime_losses ? noise.molasses_lifetime : std::numeric_limits<double>::infinity();
                apply_molasses(state, ep, stream);
            }
        },
        s);
    return result;
}

TrialRecord run_trial(const Sequence& seq, const WorldState& initial, const NoiseModel& noise, RngStream& stream,
                      const TrialOptions& opts) {
    if (seq.steps.empty() || !std::holds_alternative<step::LoadAtoms>(seq.steps.front())) {
        throw std::invalid_argument("sequence '" + seq.name + "' must start with load_atoms");
    }
    WorldState state = initial;
    TrialRecord rec;
    rec.trial_index = stream.trial_index();

    const auto pair_in_same_well = [&state] {
        const Atom* a = state.find(1);
        const Atom* b = state.find(2);
        return a != nullptr && b != nullptr && a->alive && b->alive && a->present && b->present &&
               a->bound_trap == TrapId::hdt && b->bound_trap == TrapId::hdt && a->well == b->well;
    };

    std::optional<Measurement> first_image;
    std::optional<Measurement> last_image;
    bool same_well_recorded = false;
    for (std::size_t i = 0; i < seq.steps.size(); ++i) {
        const Step& s = seq.steps[i];
        if (std::holds_alternative<step::Molasses>(s) && !same_well_recorded) {
            rec.same_well = pair_in_same_well();
            same_well_recorded = true;
        }
        std::optional<Measurement> m;
        try {
            m = execute_step(state, s, noise, stream);
        } catch (const StepError&) {
            ++rec.skipped_steps;
            continue;
        }
        if (i == 0 && opts.only_atom) {
            for (auto& a : state.atoms) {
                if ((a.id == 1 || a.id == 2) && a.id != *opts.only_atom) {
                    a.alive = false;
                    a.present = false;
                }
            }
        }
        if (m) {
            if (!first_image) {
                first_image = std::move(m);
            } else {
                last_image = std::move(m);
            }
        }
        if (const auto* ramp = std::get_if<step::RampVDT>(&s); ramp != nullptr && ramp->final_scale == 0.0) {
            const Atom* a = state.find(1);
            const Atom* b = state.find(2);
            rec.insert_valid = a != nullptr && b != nullptr && a->alive && b->alive &&
                               a->bound_trap == TrapId::hdt && b->bound_trap == TrapId::hdt;
            if (rec.insert_valid) {
                rec.insert_sep_true = b->position[1] - a->position[1];
                rec.insert_well_sep = b->well - a->well;
            } else {
                rec.insert_sep_true = std::numeric_limits<double>::quiet_NaN();
                rec.insert_well_sep = 0;
            }
        }
    }
    if (!same_well_recorded) rec.same_well = pair_in_same_well();

    const Atom* a1 = state.find(1);
    const Atom* a2 = state.find(2);
    rec.alive_1 = a1 != nullptr && a1->present && a1->alive;
    rec.alive_2 = a2 != nullptr && a2->present && a2->alive;
    if (first_image) {
        if (auto d = first_image->distance(1, 2)) rec.initial_sep = *d;
    }
    if (last_image) {
        if (auto d = last_image->distance(1, 2)) rec.final_sep_measured = *d;
    }
    if (opts.only_atom) {
        const int id = *opts.only_atom;
        rec.post_selected = first_image && std::any_of(first_image->positions.begin(), first_image->positions.end(),
                                                       [id](const auto& p) { return p.atom == id; });
    } else {
        rec.post_selected = rec.initial_sep > opts.post_selection_min_separation;
    }
    return rec;
}

}  // namespace twotrap
