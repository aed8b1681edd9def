#include "twotrap/ensemble.hpp"

#include <cstddef>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace twotrap {

std::vector<TrialRecord> run_ensemble(const Sequence& seq, const WorldState& initial, const NoiseModel& noise,
                                      std::uint64_t trials, std::uint64_t master_seed, const TrialOptions& opts) {
    validate(noise);
    std::vector<TrialRecord> records(trials);
    const auto n = static_cast<std::ptrdiff_t>(trials);
    // Exceptions must not leave the parallel region; keep the first by index.
    std::vector<std::exception_ptr> errors(trials);
#pragma omp parallel for schedule(dynamic, 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            RngStream stream(master_seed, static_cast<std::uint64_t>(i));
            records[idx] = run_trial(seq, initial, noise, stream, opts);
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return records;
}

std::vector<TrialRecord> run_ensemble_serial(const Sequence& seq, const WorldState& initial, const NoiseModel& noise,
                                             std::uint64_t trials, std::uint64_t master_seed,
                                             const TrialOptions& opts) {
    validate(noise);
    std::vector<TrialRecord> records;
    records.reserve(trials);
    for (std::uint64_t i = 0; i < trials; ++i) {
        RngStream stream(master_seed, i);
        records.push_back(run_trial(seq, initial, noise, stream, opts));
    }
    return records;
}

int set_workers(int workers) {
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
    return omp_get_max_threads();
#else
    (void)workers;
    return 1;
#endif
}

}  // namespace twotrap
