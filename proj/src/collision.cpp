#include "twotrap/collision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace twotrap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> make_edges(const FluorescenceProtocol& p) {
    const auto n = static_cast<std::size_t>(std::llround(p.end / p.bin_width));
    std::vector<double> edges(n + 1);
    for (std::size_t i = 0; i <= n; ++i) edges[i] = static_cast<double>(i) * p.bin_width;
    edges[n] = p.end;
    return edges;
}

// Lit atom-seconds per bin for one shot.
void simulate_shot(const FluorescenceStudy& study, const std::vector<double>& edges, RngStream& stream,
                   std::span<double> acc, long& n_loaded) {
    const long n = poisson_draw(stream, study.mean_atoms);
    n_loaded = n;
    std::vector<long> occupancy(static_cast<std::size_t>(study.wells), 0);
    if (study.placement == Placement::uniform) {
        for (long i = 0; i < n; ++i) ++occupancy[stream.uniform_index(static_cast<std::uint64_t>(study.wells))];
    } else {
        // Distinct wells while they last, then wrap around a random permutation.
        std::vector<long> perm(static_cast<std::size_t>(study.wells));
        for (long i = 0; i < study.wells; ++i) perm[static_cast<std::size_t>(i)] = i;
        for (long i = study.wells - 1; i > 0; --i) {
            const auto j = static_cast<long>(stream.uniform_index(static_cast<std::uint64_t>(i + 1)));
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        }
        for (long i = 0; i < n; ++i) ++occupancy[static_cast<std::size_t>(perm[static_cast<std::size_t>(i % study.wells)])];
    }

    const auto& pr = study.protocol;
    const double horizon = pr.switch_off - pr.molasses_on;
    for (long count : occupancy) {
        if (count == 0) continue;
        const auto deaths = simulate_well(static_cast<int>(count), study.episode, horizon, stream);
        for (double d : deaths) {
            const double start = pr.molasses_on;
            const double stop = pr.molasses_on + std::min(d, horizon);
            for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
                const double lo = std::max(start, edges[b]);
                const double hi = std::min(stop, edges[b + 1]);
                if (hi > lo) acc[b] += hi - lo;
            }
        }
    }
}

FluorescenceTrace run_trace(const FluorescenceStudy& study, std::uint64_t master_seed, bool parallel) {
    if (study.wells < 1) throw std::invalid_argument("fluorescence: wells must be >= 1");
    if (study.n_shots < 1) throw std::invalid_argument("fluorescence: n_shots must be >= 1");
    if (!(study.mean_atoms >= 0.0 && study.mean_atoms <= 700.0)) {
        throw std::invalid_argument("fluorescence: mean_atoms must be in [0, 700]");
    }
    validate(study.episode);
    validate(study.protocol);

    const auto edges = make_edges(study.protocol);
    const std::size_t nbins = edges.size() - 1;
    const auto shots = static_cast<std::size_t>(study.n_shots);
    std::vector<double> per_shot(shots * nbins, 0.0);
    std::vector<long> loaded(shots, 0);

    const auto body = [&](std::size_t s) {
        RngStream stream(master_seed, s);
        simulate_shot(study, edges, stream, std::span<double>(per_shot).subspan(s * nbins, nbins), loaded[s]);
    };
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 64)
        for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(shots); ++s) body(static_cast<std::size_t>(s));
    } else {
        for (std::size_t s = 0; s < shots; ++s) body(s);
    }

    // Reduce in shot order so the sum does not depend on the worker count.
    FluorescenceTrace trace;
    trace.n_shots = study.n_shots;
    trace.time_bins.reserve(nbins);
    trace.mean_signal.assign(nbins, 0.0);
    for (std::size_t s = 0; s < shots; ++s) {
        for (std::size_t b = 0; b < nbins; ++b) trace.mean_signal[b] += per_shot[s * nbins + b];
    }
    long total_loaded = 0;
    for (long n : loaded) total_loaded += n;
    trace.mean_initial_atoms = static_cast<double>(total_loaded) / static_cast<double>(shots);
    for (std::size_t b = 0; b < nbins; ++b) {
        const double width = edges[b + 1] - edges[b];
        trace.time_bins.emplace_back(edges[b], edges[b + 1]);
        trace.mean_signal[b] = study.episode.background_level +
                               study.episode.fluorescence_per_atom * trace.mean_signal[b] /
                                   (static_cast<double>(shots) * width);
    }
    return trace;
}

}  // namespace

void validate(const MolassesEpisode& ep) {
    if (!(ep.duration >= 0.0)) throw std::invalid_argument("molasses.duration must be >= 0");
    if (!(ep.pair_collision_rate > 0.0)) throw std::invalid_argument("molasses.pair_collision_rate must be > 0");
    if (!(ep.single_survival_lifetime > 0.0)) throw std::invalid_argument("molasses.single_survival_lifetime must be > 0");
    if (!(ep.pair_loss_branching >= 0.0 && ep.pair_loss_branching <= 1.0)) {
        throw std::invalid_argument("molasses.pair_loss_branching must be in [0, 1]");
    }
    if (!(ep.fluorescence_per_atom >= 0.0)) throw std::invalid_argument("molasses.fluorescence_per_atom must be >= 0");
    if (!(ep.background_level >= 0.0)) throw std::invalid_argument("molasses.background_level must be >= 0");
}

void validate(const FluorescenceProtocol& p) {
    if (!(p.bin_width > 0.0)) throw std::invalid_argument("fluorescence.bin_width must be > 0");
    if (!(p.molasses_on >= 0.0 && p.molasses_on <= p.switch_off && p.switch_off <= p.end)) {
        throw std::invalid_argument("fluorescence: need 0 <= molasses_on <= switch_off <= end");
    }
}

std::vector<double> simulate_well(int n_atoms, const MolassesEpisode& ep, double horizon, RngStream& stream) {
    std::vector<double> death(static_cast<std::size_t>(std::max(n_atoms, 0)), kInf);
    std::vector<std::size_t> alive(death.size());
    for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;

    const double life_rate = std::isinf(ep.single_survival_lifetime) ? 0.0 : 1.0 / ep.single_survival_lifetime;
    double t = 0.0;
    while (!alive.empty()) {
        const auto k = static_cast<double>(alive.size());
        const double pair_rate = ep.pair_collision_rate * k * (k - 1.0) / 2.0;
        const double total = pair_rate + life_rate * k;
        if (total == 0.0) break;
        t += exponential_time(stream, total);
        if (t >= horizon) break;

        const auto kill = [&](std::size_t pos) {
            death[alive[pos]] = t;
            alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(pos));
        };
        if (stream.uniform() * total < pair_rate) {
            const auto i = stream.uniform_index(alive.size());
            auto j = stream.uniform_index(alive.size() - 1);
            if (j >= i) ++j;
            if (bernoulli_draw(stream, ep.pair_loss_branching)) {
                kill(std::max(i, j));
                kill(std::min(i, j));
            } else {
                kill(bernoulli_draw(stream, 0.5) ? i : j);
            }
        } else {
            kill(stream.uniform_index(alive.size()));
        }
    }
    return death;
}

void apply_molasses(WorldState& state, const MolassesEpisode& ep, RngStream& stream) {
    validate(ep);
    std::map<long, std::vector<Atom*>> wells;
    for (auto& a : state.atoms) {
        if (!a.alive) continue;
        if (a.bound_trap != TrapId::hdt) {
            throw StepError(StepError::Kind::incompatible_binding,
                            "molasses: atom " + std::to_string(a.id) + " is not held in an HDT well");
        }
        wells[a.well].push_back(&a);
    }
    for (auto& [well, group] : wells) {
        const auto deaths = simulate_well(static_cast<int>(group.size()), ep, ep.duration, stream);
        for (std::size_t i = 0; i < group.size(); ++i) {
            if (deaths[i] <= ep.duration) group[i]->alive = false;
        }
    }
    state.clock += ep.duration;
}

double expected_multi_occupancy(long n_atoms, long wells) {
    if (n_atoms < 0) throw std::invalid_argument("expected_multi_occupancy: n_atoms must be >= 0");
    if (wells < 1) throw std::invalid_argument("expected_multi_occupancy: wells must be >= 1");
    if (n_atoms > wells) return 1.0;
    double all_distinct = 1.0;
    for (long i = 0; i < n_atoms; ++i) all_distinct *= static_cast<double>(wells - i) / static_cast<double>(wells);
    return 1.0 - all_distinct;
}

FluorescenceTrace fluorescence_trace(const FluorescenceStudy& study, std::uint64_t master_seed) {
    return run_trace(study, master_seed, true);
}

FluorescenceTrace fluorescence_trace_serial(const FluorescenceStudy& study, std::uint64_t master_seed) {
    return run_trace(study, master_seed, false);
}

}  // namespace twotrap
