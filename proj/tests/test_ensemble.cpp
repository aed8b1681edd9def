#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "twotrap/ensemble.hpp"

using namespace twotrap;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool identical(const TrialRecord& a, const TrialRecord& b) {
    return a.trial_index == b.trial_index && same_bits(a.initial_sep, b.initial_sep) &&
           same_bits(a.final_sep_measured, b.final_sep_measured) && same_bits(a.insert_sep_true, b.insert_sep_true) &&
           a.insert_well_sep == b.insert_well_sep && a.insert_valid == b.insert_valid && a.same_well == b.same_well &&
           a.alive_1 == b.alive_1 && a.alive_2 == b.alive_2 && a.post_selected == b.post_selected &&
           a.skipped_steps == b.skipped_steps;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("parallel ensemble matches the serial reference bit for bit") {
    for (const char* name : {"rearrange.seq", "join.seq"}) {
        const auto seq = load_sequence_file(std::string(TWOTRAP_SOURCE_DIR) + "/sequences/" + name);
        const auto serial = run_ensemble_serial(seq, initial_world(), default_noise(), 3000, 123);
        for (int workers : {1, 4}) {
            set_workers(workers);
            const auto par = run_ensemble(seq, initial_world(), default_noise(), 3000, 123);
            REQUIRE(par.size() == serial.size());
            for (std::size_t i = 0; i < par.size(); ++i) REQUIRE(identical(par[i], serial[i]));
        }
    }
    set_workers(0);
}

TEST_CASE("trial order does not matter") {
    const auto seq = load_sequence_file(std::string(TWOTRAP_SOURCE_DIR) + "/sequences/rearrange.seq");
    const auto all = run_ensemble_serial(seq, initial_world(), default_noise(), 200, 9);
    for (std::uint64_t t = 200; t-- > 0;) {
        RngStream stream(9, t);
        REQUIRE(identical(run_trial(seq, initial_world(), default_noise(), stream), all[t]));
    }
}

TEST_CASE("errors propagate out of the parallel region") {
    Sequence bad;
    bad.steps = {step::Image{1.0}};
    CHECK_THROWS_AS(run_ensemble(bad, initial_world(), default_noise(), 10, 1), std::invalid_argument);
}

}
