#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "twotrap/sequence.hpp"

namespace twotrap {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Probability of landing a pair in the intended well: the fraction of a
// centred Gaussian of rms `delta_d_true` falling within +-lambda_hdt/4,
// scaled by p_noloss. Closed form via erf.
double p_theor(double delta_d_true, double p_noloss, double lambda_hdt);

// Same quantity by adaptive Simpson quadrature of the Gaussian integrand.
// Kept for cross-validation only.
double p_theor_quadrature(double delta_d_true, double p_noloss, double lambda_hdt, double tolerance = 1e-14);

struct Sensitivity {
    double d_dwidth = 0.0;     // dp/d(delta_d_true), 1/um
    double d_dnoloss = 0.0;    // dp/d(p_noloss)
    double spread = 0.0;       // first-order spread for the given parameter errors
};

Sensitivity p_theor_sensitivity(double delta_d_true, double p_noloss, double lambda_hdt, double width_error,
                                double noloss_error);

// sqrt(2 transport^2 + insert^2 + meas^2)
double error_budget(double transport_rms, double insert_rms, double meas_rms);

// sqrt(measured^2 - meas^2); DomainError when measured < meas.
double deconvolve_width(double measured_width, double meas_rms);

struct LossAlgebra {
    double p_uncorr = 0.0;
    double p_noloss = 1.0;
};

LossAlgebra loss_algebra(double p1, double p2);

struct DistanceSample {
    enum class Label { initial, final };
    std::vector<double> values;
    Label label = Label::final;
};

// One distance per line (um); blank lines and '#' comments are skipped.
// Throws DomainError naming the line of a bad or negative value.
DistanceSample parse_distance_csv(std::string_view text, DistanceSample::Label label = DistanceSample::Label::final);
DistanceSample load_distance_csv(const std::string& path, DistanceSample::Label label = DistanceSample::Label::final);

// Half-open bins [origin + i w, origin + (i + 1) w). Values below origin are
// counted in `underflow` so the total is preserved.
struct Histogram {
    double origin = 0.0;
    double bin_width = 1.0;
    std::vector<std::uint64_t> counts;
    std::uint64_t underflow = 0;

    double bin_lo(std::size_t i) const { return origin + static_cast<double>(i) * bin_width; }
    double bin_center(std::size_t i) const { return origin + (static_cast<double>(i) + 0.5) * bin_width; }
    std::uint64_t total() const;
};

Histogram build_histogram(const DistanceSample& sample, double bin_width, double origin = 0.0);

// Histogram presets: one HDT wavelength and a twelfth of it.
inline constexpr double kCoarseBin = 1.064;
inline constexpr double kFineBin = 1.064 / 12.0;

struct CombFit {
    double center = 0.0;          // envelope centre
    double envelope_width = 0.0;  // 1/sqrt(e) half-width of the envelope
    double peak_width = 0.0;      // 1/sqrt(e) half-width of each tooth
    double period = 0.0;
    double phase = 0.0;           // tooth positions: phase + n * period
    double amplitude = 0.0;
    double residual = 0.0;        // sum of squared count residuals
    // Standard errors from the least-squares Jacobian; NaN when unavailable.
    double center_err = std::numeric_limits<double>::quiet_NaN();
    double envelope_width_err = std::numeric_limits<double>::quiet_NaN();
    double peak_width_err = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool converged = false;
    bool envelope_identifiable = true;
    bool peak_width_identifiable = true;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Least-squares fit of
//   A * sum_n exp(-(n P + phase - c)^2 / (2 W^2)) * tooth_n(d),
// tooth_n a unit Gaussian of rms w centred at n P + phase, integrated over
// each bin. The period P is held fixed.
CombFit fit_comb(const Histogram& hist, double period);

// Model counts of `fit` for each bin of `hist`.
std::vector<double> comb_model(const CombFit& fit, const Histogram& hist);

struct RateEstimate {
    double point = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    double confidence = 0.6827;
    std::uint64_t k = 0;
    std::uint64_t n = 0;
};

inline constexpr double kOneSigma = 0.6827;

// Exact (Clopper-Pearson) central interval; one-sided at k = 0 and k = n.
RateEstimate binomial_ci(std::uint64_t k, std::uint64_t n, double confidence = kOneSigma);

enum class SuccessCriterion {
    same_well,
    target_well,                // pair intact at the nearest-well quantization of the target
    within_one_well_of_target,  // pair intact within one well of it
    pair_intact,
    pair_lost,                  // both atoms gone at the end (the collision signature)
};

std::string to_string(SuccessCriterion c);

// Rate over post-selected records; throws DomainError when none are.
RateEstimate success_rate(std::span<const TrialRecord> records, SuccessCriterion criterion,
                          double target_distance = 0.0, double period = 0.532, double confidence = kOneSigma);

struct SampleStats {
    std::size_t n = 0;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();  // n - 1 denominator
};

SampleStats sample_stats(std::span<const double> values);

}  // namespace twotrap
