#pragma once

#include <cstdint>
#include <limits>
#include <string>

namespace twotrap {

// Every stochastic parameter of the experiment. Lengths in um, times in s.
struct NoiseModel {
    double transport_rms = 0.190;       // conveyor-belt transport along the HDT
    double insert_rms = 0.65;           // reinsertion of the extracted atom
    double distance_meas_rms = 0.130;   // ICCD pair distance
    double position_meas_rms = 0.140;   // ICCD single position
    double radial_placement_rms = 2.0;  // mirror tilt and VDT transport
    double loss_prob_atom1 = 0.065;
    double loss_prob_atom2 = 0.0;
    double storage_lifetime_hdt = 8.0;
    double storage_lifetime_vdt = 13.0;
    double molasses_lifetime = 60.0;
    double pair_collision_rate = 20.0;  // per doubly-occupied well, 1/s
    // Probability that a light-induced collision ejects both atoms rather
    // than one.
    double pair_loss_branching = 1.0;
    // When false, trap-lifetime losses during a sequence are not drawn
    // separately; loss_prob_atom{1,2} are then the whole manipulation loss.
    bool lifetime_losses = false;
};

NoiseModel default_noise();
// Same as the default but with the reinsertion spread of the join run.
NoiseModel join_noise();

void validate(const NoiseModel& noise);

// Counter-based random stream. Draw i of trial t is a pure function of
// (master_seed, t, i):
//   key   = mix(master_seed ^ mix(trial_index + 0x9e3779b97f4a7c15))
//   out_i = mix(key + (i + 1) * 0x9e3779b97f4a7c15)
// where mix is the SplitMix64 finalizer.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t master_seed, std::uint64_t trial_index);

    std::uint64_t next_u64();
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }
    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t trial_index() const { return trial_index_; }
    std::uint64_t draw_counter() const { return counter_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next_u64(); }

private:
    std::uint64_t master_seed_;
    std::uint64_t trial_index_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

double gaussian_draw(RngStream& stream, double mean, double rms);
bool bernoulli_draw(RngStream& stream, double p);
bool exponential_survival(RngStream& stream, double duration, double lifetime);
// Exponential waiting time with the given rate; +inf when rate is zero.
double exponential_time(RngStream& stream, double rate);
// Poisson deviate by CDF inversion; mean must be in [0, 700].
long poisson_draw(RngStream& stream, double mean);

}  // namespace twotrap
