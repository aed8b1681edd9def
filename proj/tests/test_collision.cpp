#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "twotrap/collision.hpp"

using namespace twotrap;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Brute-force count of placements of n atoms in w wells with a repeated well.
double enumerate_multi(long n, long w) {
    long total = 1;
    for (long i = 0; i < n; ++i) total *= w;
    long multi = 0;
    std::vector<long> digits(static_cast<std::size_t>(n), 0);
    for (long code = 0; code < total; ++code) {
        long c = code;
        for (auto& d : digits) {
            d = c % w;
            c /= w;
        }
        bool repeat = false;
        for (std::size_t i = 0; i < digits.size() && !repeat; ++i) {
            for (std::size_t j = i + 1; j < digits.size(); ++j) repeat = repeat || digits[i] == digits[j];
        }
        multi += repeat ? 1 : 0;
    }
    return static_cast<double>(multi) / static_cast<double>(total);
}

double mean_alive(const MolassesEpisode& ep, int atoms_per_well, int shots, std::uint64_t seed) {
    double alive = 0.0;
    for (int s = 0; s < shots; ++s) {
        RngStream stream(seed, static_cast<std::uint64_t>(s));
        for (double d : simulate_well(atoms_per_well, ep, ep.duration, stream)) alive += d > ep.duration ? 1.0 : 0.0;
    }
    return alive / shots;
}

WorldState hdt_atoms(std::vector<long> wells) {
    WorldState s = initial_world();
    int id = 1;
    for (long w : wells) {
        Atom a;
        a.id = id++;
        a.bound_trap = TrapId::hdt;
        a.well = w;
        a.position = {0.0, s.hdt.well_center(w), 0.0};
        s.atoms.push_back(a);
    }
    return s;
}

}  // namespace

TEST_SUITE("collision") {

TEST_CASE("multi-occupancy probability") {
    CHECK(expected_multi_occupancy(2, 2) == doctest::Approx(0.5));
    CHECK(expected_multi_occupancy(3, 25) == doctest::Approx(1.0 - 25.0 * 24.0 * 23.0 / 15625.0));
    CHECK(expected_multi_occupancy(3, 25) == doctest::Approx(0.1168).epsilon(1e-4));
    CHECK(expected_multi_occupancy(26, 25) == 1.0);
    CHECK(expected_multi_occupancy(0, 5) == 0.0);
    CHECK(expected_multi_occupancy(1, 5) == 0.0);
    for (long n = 0; n <= 4; ++n) {
        for (long w = 1; w <= 7; ++w) CHECK(expected_multi_occupancy(n, w) == doctest::Approx(enumerate_multi(n, w)));
    }
    CHECK(expected_multi_occupancy(3, 25) == doctest::Approx(enumerate_multi(3, 25)));
    CHECK_THROWS_AS(expected_multi_occupancy(3, 0), std::invalid_argument);
}

TEST_CASE("pair loss follows the exponential law") {
    MolassesEpisode ep;
    ep.single_survival_lifetime = kInf;
    ep.duration = 0.15;
    int lost = 0;
    constexpr int n = 100000;
    for (int s = 0; s < n; ++s) {
        RngStream stream(31, static_cast<std::uint64_t>(s));
        const auto d = simulate_well(2, ep, ep.duration, stream);
        REQUIRE(d[0] == d[1]);
        lost += d[0] <= ep.duration ? 1 : 0;
    }
    CHECK(std::abs(lost / static_cast<double>(n) - (1.0 - std::exp(-3.0))) <= 0.004);

    ep.duration = 5.0;
    CHECK(mean_alive(ep, 2, 2000, 4) == 0.0);
}

TEST_CASE("one-atom branching loses exactly one") {
    MolassesEpisode ep;
    ep.single_survival_lifetime = kInf;
    ep.pair_loss_branching = 0.0;
    ep.duration = 10.0;
    for (std::uint64_t s = 0; s < 500; ++s) {
        RngStream stream(8, s);
        const auto d = simulate_well(2, ep, ep.duration, stream);
        REQUIRE(((d[0] <= ep.duration) != (d[1] <= ep.duration)));
    }
}

TEST_CASE("singles only see lifetime losses") {
    MolassesEpisode ep;
    ep.duration = 1.0;
    ep.single_survival_lifetime = 60.0;
    int alive = 0;
    constexpr int shots = 40000;
    for (int s = 0; s < shots; ++s) {
        WorldState w = hdt_atoms({-3, 0, 4});
        RngStream stream(17, static_cast<std::uint64_t>(s));
        apply_molasses(w, ep, stream);
        REQUIRE(w.clock == 1.0);
        for (const auto& a : w.atoms) alive += a.alive ? 1 : 0;
    }
    CHECK(std::abs(alive / (3.0 * shots) - std::exp(-1.0 / 60.0)) <= 0.003);

    ep.single_survival_lifetime = kInf;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        WorldState w = hdt_atoms({1, 2});
        RngStream stream(18, s);
        apply_molasses(w, ep, stream);
        REQUIRE(w.atoms[0].alive);
        REQUIRE(w.atoms[1].alive);
    }
}

TEST_CASE("molasses needs HDT-bound atoms") {
    WorldState w = hdt_atoms({0});
    w.atoms[0].bound_trap = TrapId::vdt;
    RngStream stream(1, 1);
    CHECK_THROWS_AS(apply_molasses(w, MolassesEpisode{}, stream), StepError);
}

TEST_CASE("monotone in rate and duration") {
    MolassesEpisode ep;
    ep.duration = 0.05;
    ep.single_survival_lifetime = kInf;
    constexpr int shots = 10000;
    double prev = mean_alive(ep, 3, shots, 55);
    for (double rate : {40.0, 80.0, 160.0}) {
        ep.pair_collision_rate = rate;
        const double cur = mean_alive(ep, 3, shots, 55);
        CHECK(cur <= prev + 0.02);
        prev = cur;
    }
    ep.pair_collision_rate = 20.0;
    prev = 3.0;
    for (double dur : {0.01, 0.05, 0.1, 0.3}) {
        ep.duration = dur;
        const double cur = mean_alive(ep, 3, shots, 56);
        CHECK(cur <= prev + 0.02);
        prev = cur;
    }
}

TEST_CASE("fluorescence traces") {
    FluorescenceStudy study;
    study.mean_atoms = 0.0;
    study.n_shots = 10;
    study.episode.background_level = 0.7;
    const auto flat = fluorescence_trace(study, 1);
    REQUIRE(flat.time_bins.size() == flat.mean_signal.size());
    CHECK(flat.time_bins.size() == 130);
    for (double v : flat.mean_signal) CHECK(v == doctest::Approx(0.7));
    for (std::size_t i = 1; i < flat.time_bins.size(); ++i) CHECK(flat.time_bins[i].first == flat.time_bins[i - 1].second);

    // Distinct placement never collides: the lit level stays at the loaded atom number.
    study.mean_atoms = 10.0;
    study.n_shots = 400;
    study.placement = Placement::distinct;
    study.episode.single_survival_lifetime = kInf;
    study.episode.background_level = 0.0;
    const auto distinct = fluorescence_trace(study, 2);
    const auto& bins = distinct.time_bins;
    for (std::size_t b = 0; b < bins.size(); ++b) {
        const double mid = 0.5 * (bins[b].first + bins[b].second);
        if (bins[b].first >= 0.26 && bins[b].second <= 0.56) {
            CHECK(distinct.mean_signal[b] == doctest::Approx(distinct.mean_initial_atoms).epsilon(1e-9));
        } else if (mid < 0.26 || mid > 0.56) {
            CHECK(distinct.mean_signal[b] == 0.0);
        }
    }

    study.mean_atoms = 19.0;
    study.placement = Placement::uniform;
    study.n_shots = 300;
    const auto parallel = fluorescence_trace(study, 9);
    const auto serial = fluorescence_trace_serial(study, 9);
    CHECK(parallel.mean_signal == serial.mean_signal);
    CHECK(parallel.mean_initial_atoms == serial.mean_initial_atoms);
    // Uniform placement at 19 atoms decays.
    std::size_t first_lit = 0;
    while (bins[first_lit].first < 0.26) ++first_lit;
    CHECK(parallel.mean_signal[first_lit + 40] < 0.8 * parallel.mean_signal[first_lit]);

    study.wells = 0;
    CHECK_THROWS_AS(fluorescence_trace(study, 1), std::invalid_argument);
    study.wells = 25;
    study.mean_atoms = 800.0;
    CHECK_THROWS_AS(fluorescence_trace(study, 1), std::invalid_argument);
}

}
