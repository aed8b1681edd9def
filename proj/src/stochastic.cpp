#include "twotrap/stochastic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace twotrap {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void check_nonneg(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("noise.") + name + " must be >= 0");
}

void check_prob(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string("noise.") + name + " must be in [0, 1]");
}

void check_pos(double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("noise.") + name + " must be > 0");
}

}  // namespace

NoiseModel default_noise() { return NoiseModel{}; }

NoiseModel join_noise() {
    NoiseModel n;
    n.insert_rms = 0.82;
    return n;
}

void validate(const NoiseModel& n) {
    check_nonneg(n.transport_rms, "transport_rms");
    check_nonneg(n.insert_rms, "insert_rms");
    check_nonneg(n.distance_meas_rms, "distance_meas_rms");
    check_nonneg(n.position_meas_rms, "position_meas_rms");
    check_nonneg(n.radial_placement_rms, "radial_placement_rms");
    check_prob(n.loss_prob_atom1, "loss_prob_atom1");
    check_prob(n.loss_prob_atom2, "loss_prob_atom2");
    check_pos(n.storage_lifetime_hdt, "storage_lifetime_hdt");
    check_pos(n.storage_lifetime_vdt, "storage_lifetime_vdt");
    check_pos(n.molasses_lifetime, "molasses_lifetime");
    check_pos(n.pair_collision_rate, "pair_collision_rate");
    check_prob(n.pair_loss_branching, "pair_loss_branching");
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t trial_index)
    : master_seed_(master_seed), trial_index_(trial_index), key_(mix(master_seed ^ mix(trial_index + kGolden))) {}

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return mix(key_ + counter_ * kGolden);
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be >= 1");
    // Rejection on the top of the range keeps every residue equally likely.
    const std::uint64_t limit = max() - max() % n;
    for (;;) {
        const std::uint64_t v = next_u64();
        if (v < limit) return v % n;
    }
}

double gaussian_draw(RngStream& stream, double mean, double rms) {
    if (rms < 0.0) throw std::invalid_argument("gaussian_draw: rms must be >= 0");
    if (rms == 0.0) return mean;
    const double u1 = stream.uniform_pos();
    const double u2 = stream.uniform();
    return mean + rms * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool bernoulli_draw(RngStream& stream, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli_draw: p must be in [0, 1]");
    if (p == 0.0) return false;
    if (p == 1.0) return true;
    return stream.uniform() < p;
}

bool exponential_survival(RngStream& stream, double duration, double lifetime) {
    if (duration < 0.0) throw std::invalid_argument("exponential_survival: duration must be >= 0");
    if (!(lifetime > 0.0)) throw std::invalid_argument("exponential_survival: lifetime must be > 0");
    if (duration == 0.0 || std::isinf(lifetime)) return true;
    return stream.uniform() < std::exp(-duration / lifetime);
}

double exponential_time(RngStream& stream, double rate) {
    if (rate < 0.0) throw std::invalid_argument("exponential_time: rate must be >= 0");
    if (rate == 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(stream.uniform_pos()) / rate;
}

long poisson_draw(RngStream& stream, double mean) {
    if (!(mean >= 0.0 && mean <= 700.0)) throw std::invalid_argument("poisson_draw: mean must be in [0, 700]");
    if (mean == 0.0) return 0;
    const double u = stream.uniform();
    long k = 0;
    double p = std::exp(-mean);
    double cdf = p;
    while (u >= cdf) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
        if (p == 0.0 && static_cast<double>(k) > mean) break;  // cdf stalled below u by rounding
    }
    return k;
}

}  // namespace twotrap
