#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "twotrap/sequence.hpp"

using namespace twotrap;

namespace {

template <class F>
std::string range_message(F&& f) {
    try {
        f();
    } catch (const RangeError& e) {
        return e.what();
    }
    return {};
}

double random_value(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}

Step random_step(std::mt19937_64& rng) {
    const auto dur = [&] { return random_value(rng, 1e-6, 2.0); };
    std::uniform_int_distribution<int> pick(0, 8);
    std::uniform_int_distribution<int> atom(1, 4);
    switch (pick(rng)) {
        case 0: return step::LoadAtoms{std::uniform_int_distribution<int>(1, 64)(rng), random_value(rng, 40.0, 1000.0)};
        case 1: return step::Image{dur()};
        case 2: return step::TransportHDT{atom(rng), random_value(rng, -5000.0, 5000.0), dur()};
        case 3: return step::ExtractVDT{atom(rng), random_value(rng, 1e-3, 60.0), dur()};
        case 4: return step::TiltHDT{random_value(rng, -40.0, 40.0), dur()};
        case 5: return step::TransportVDT{random_value(rng, -60.0, 60.0), dur()};
        case 6: return step::MergeRadial{dur()};
        case 7: return step::RampVDT{random_value(rng, 0.0, 1.0), dur()};
        default: return step::Molasses{dur()};
    }
}

}  // namespace

TEST_SUITE("sequence_parser") {

TEST_CASE("single steps by grammar") {
    const auto seq = parse_sequence("transport_hdt atom=2 y=15.0 dur=0.0005");
    REQUIRE(seq.steps.size() == 1);
    const auto* t = std::get_if<step::TransportHDT>(&seq.steps[0]);
    REQUIRE(t != nullptr);
    CHECK(t->atom == 2);
    CHECK(t->target_y == 15.0);
    CHECK(t->duration == 0.0005);

    const auto all = parse_sequence(
        "# header comment\n"
        "\n"
        "sequence name=demo target=15\n"
        "load_atoms count=2 spread=80   # trailing\n"
        "image exposure=1\n"
        "extract_vdt atom=1 lift=57 dur=0.03\n"
        "\ttilt_hdt dx=-20 dur=0.05\n"
        "transport_vdt z=0 dur=0.03\n"
        "merge_radial dur=0.05\n"
        "ramp_vdt scale=0 dur=0.01\n"
        "molasses dur=1\r\n");
    CHECK(all.name == "demo");
    CHECK(all.target_distance == 15.0);
    REQUIRE(all.steps.size() == 8);
    CHECK(std::get<step::LoadAtoms>(all.steps[0]) == step::LoadAtoms{2, 80.0});
    CHECK(std::get<step::TiltHDT>(all.steps[3]).delta_x == -20.0);
    CHECK(std::get<step::RampVDT>(all.steps[6]).final_scale == 0.0);
    CHECK(step_name(all.steps[7]) == "molasses");
}

TEST_CASE("empty input is an empty valid sequence") {
    CHECK(parse_sequence("").steps.empty());
    CHECK(parse_sequence("\n\n   # nothing\n").steps.empty());
}

TEST_CASE("range errors name the bound") {
    CHECK(range_message([] { parse_sequence("tilt_hdt dx=55 dur=0.05"); }).find("|dx| <= 40") != std::string::npos);
    CHECK(range_message([] { parse_sequence("load_atoms count=0 spread=80"); }).find("count") != std::string::npos);
    CHECK(range_message([] { parse_sequence("load_atoms count=65 spread=80"); }).find("count") != std::string::npos);
    CHECK(range_message([] { parse_sequence("load_atoms count=2 spread=0"); }).find("spread") != std::string::npos);
    CHECK(range_message([] { parse_sequence("image exposure=0"); }).find("exposure") != std::string::npos);
    CHECK(range_message([] { parse_sequence("transport_hdt atom=0 y=1 dur=1"); }).find("atom") != std::string::npos);
    CHECK(range_message([] { parse_sequence("transport_hdt atom=1 y=6000 dur=1"); }).find("|y|") != std::string::npos);
    CHECK(range_message([] { parse_sequence("extract_vdt atom=1 lift=61 dur=1"); }).find("lift") != std::string::npos);
    CHECK(range_message([] { parse_sequence("transport_vdt z=-61 dur=1"); }).find("|z|") != std::string::npos);
    CHECK(range_message([] { parse_sequence("ramp_vdt scale=1.5 dur=1"); }).find("scale") != std::string::npos);
    CHECK(range_message([] { parse_sequence("merge_radial dur=0"); }).find("dur") != std::string::npos);
    CHECK(range_message([] { parse_sequence("molasses dur=-1"); }).find("dur") != std::string::npos);
    CHECK(range_message([] { parse_sequence("sequence name=x target=-1"); }).find("target") != std::string::npos);

    try {
        parse_sequence("image exposure=1\n\ntilt_hdt dx=-40.5 dur=0.05\n");
        FAIL("expected a range error");
    } catch (const RangeError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("syntax errors carry line, column and token") {
    try {
        parse_sequence("image exposure=1\ntransport_hdt atom=1 y=abc dur=1\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 24);
        CHECK(e.token() == "abc");
    }
    try {
        parse_sequence("  warp_drive dur=1");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
        CHECK(e.column() == 3);
        CHECK(e.token() == "warp_drive");
    }
    CHECK_THROWS_AS(parse_sequence("image exposure=1 gain=2"), ParseError);
    CHECK_THROWS_AS(parse_sequence("image exposure=1 exposure=2"), ParseError);
    CHECK_THROWS_AS(parse_sequence("image"), ParseError);
    CHECK_THROWS_AS(parse_sequence("image exposure"), ParseError);
    CHECK_THROWS_AS(parse_sequence("load_atoms count=2.5 spread=80"), ParseError);
    CHECK_THROWS_AS(parse_sequence("molasses dur=nan"), ParseError);
    CHECK_THROWS_AS(parse_sequence("image exposure=1\nsequence name=late target=0"), ParseError);
}

TEST_CASE("render and parse round-trip") {
    std::mt19937_64 rng(0x5eed);
    for (int trial = 0; trial < 300; ++trial) {
        Sequence seq;
        seq.name = "seq" + std::to_string(trial);
        seq.target_distance = random_value(rng, 0.0, 100.0);
        const int n = std::uniform_int_distribution<int>(0, 12)(rng);
        for (int i = 0; i < n; ++i) seq.steps.push_back(random_step(rng));
        const auto text = render_sequence(seq);
        const auto back = parse_sequence(text);
        REQUIRE(back == seq);
        REQUIRE(render_sequence(back) == text);
    }
}

TEST_CASE("shipped sequence files parse") {
    const std::string dir = std::string(TWOTRAP_SOURCE_DIR) + "/sequences/";
    const auto rearrange = load_sequence_file(dir + "rearrange.seq");
    CHECK(rearrange.target_distance == 15.0);
    CHECK(std::holds_alternative<step::LoadAtoms>(rearrange.steps.front()));
    const auto join = load_sequence_file(dir + "join.seq");
    CHECK(join.target_distance == 0.0);
    CHECK(std::holds_alternative<step::Molasses>(join.steps[join.steps.size() - 2]));
    CHECK_THROWS(load_sequence_file(dir + "missing.seq"));
}

}
