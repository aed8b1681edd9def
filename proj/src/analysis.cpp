#include "twotrap/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "twotrap/trap_model.hpp"

namespace twotrap {

namespace {

double std_normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

double simpson(double a, double b, double fa, double fm, double fb) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); }

double adaptive_simpson(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = std_normal_pdf(lm);
    const double frm = std_normal_pdf(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return adaptive_simpson(a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson(m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

void check_p_theor_args(double delta_d_true, double p_noloss, double lambda_hdt) {
    if (!(delta_d_true > 0.0)) throw DomainError("p_theor: delta_d_true must be > 0");
    if (!(p_noloss >= 0.0 && p_noloss <= 1.0)) throw DomainError("p_theor: p_noloss must be in [0, 1]");
    if (!(lambda_hdt > 0.0)) throw DomainError("p_theor: lambda_hdt must be > 0");
}

}  // namespace

double p_theor(double delta_d_true, double p_noloss, double lambda_hdt) {
    check_p_theor_args(delta_d_true, p_noloss, lambda_hdt);
    return p_noloss * std::erf((lambda_hdt / 4.0) / (std::numbers::sqrt2 * delta_d_true));
}

double p_theor_quadrature(double delta_d_true, double p_noloss, double lambda_hdt, double tolerance) {
    check_p_theor_args(delta_d_true, p_noloss, lambda_hdt);
    // Integrate the standardized density over [0, lambda/(4 delta)] and double.
    const double upper = lambda_hdt / 4.0 / delta_d_true;
    constexpr int panels = 16;
    double sum = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double a = upper * i / panels;
        const double b = upper * (i + 1) / panels;
        const double fa = std_normal_pdf(a);
        const double fm = std_normal_pdf(0.5 * (a + b));
        const double fb = std_normal_pdf(b);
        sum += adaptive_simpson(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tolerance / panels, 48);
    }
    return p_noloss * 2.0 * sum;
}

Sensitivity p_theor_sensitivity(double delta_d_true, double p_noloss, double lambda_hdt, double width_error,
                                double noloss_error) {
    check_p_theor_args(delta_d_true, p_noloss, lambda_hdt);
    const double a = lambda_hdt / 4.0;
    const double x = a / (std::numbers::sqrt2 * delta_d_true);
    Sensitivity s;
    s.d_dnoloss = std::erf(x);
    s.d_dwidth = p_noloss * 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x) *
                 (-a / (std::numbers::sqrt2 * delta_d_true * delta_d_true));
    s.spread = std::hypot(s.d_dwidth * width_error, s.d_dnoloss * noloss_error);
    return s;
}

double error_budget(double transport_rms, double insert_rms, double meas_rms) {
    if (transport_rms < 0.0 || insert_rms < 0.0 || meas_rms < 0.0) {
        throw DomainError("error_budget: rms inputs must be >= 0");
    }
    return std::sqrt(2.0 * transport_rms * transport_rms + insert_rms * insert_rms + meas_rms * meas_rms);
}

double deconvolve_width(double measured_width, double meas_rms) {
    if (meas_rms < 0.0) throw DomainError("deconvolve_width: meas_rms must be >= 0");
    if (measured_width < meas_rms) throw DomainError("deconvolve_width: measured width below measurement rms");
    return std::sqrt(measured_width * measured_width - meas_rms * meas_rms);
}

LossAlgebra loss_algebra(double p1, double p2) {
    if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0)) throw DomainError("loss_algebra: probabilities must be in [0, 1]");
    return {p1 * p2, (1.0 - p1) * (1.0 - p2)};
}

std::uint64_t Histogram::total() const {
    std::uint64_t t = underflow;
    for (auto c : counts) t += c;
    return t;
}

DistanceSample parse_distance_csv(std::string_view text, DistanceSample::Label label) {
    DistanceSample out;
    out.label = label;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r,");
        if (first == std::string_view::npos) continue;
        line = line.substr(first, line.find_last_not_of(" \t\r,") - first + 1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
        if (ec != std::errc{} || ptr != line.data() + line.size() || !std::isfinite(v) || v < 0.0) {
            throw DomainError("distance csv line " + std::to_string(line_no) + ": expected a finite distance >= 0, got '" +
                              std::string(line) + "'");
        }
        out.values.push_back(v);
    }
    return out;
}

DistanceSample load_distance_csv(const std::string& path, DistanceSample::Label label) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open distance file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_distance_csv(buf.str(), label);
}

Histogram build_histogram(const DistanceSample& sample, double bin_width, double origin) {
    if (!(bin_width > 0.0)) throw DomainError("build_histogram: bin_width must be > 0");
    Histogram h;
    h.origin = origin;
    h.bin_width = bin_width;
    for (double v : sample.values) {
        if (!std::isfinite(v)) throw DomainError("build_histogram: non-finite distance");
        const double t = std::floor((v - origin) / bin_width);
        if (t < 0.0) {
            ++h.underflow;
            continue;
        }
        const auto idx = static_cast<std::size_t>(t);
        if (idx >= h.counts.size()) h.counts.resize(idx + 1, 0);
        ++h.counts[idx];
    }
    return h;
}

RateEstimate binomial_ci(std::uint64_t k, std::uint64_t n, double confidence) {
    if (n == 0) throw DomainError("binomial_ci: n must be >= 1");
    if (k > n) throw DomainError("binomial_ci: k must not exceed n");
    if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("binomial_ci: confidence must be in (0, 1)");
    const double alpha = 1.0 - confidence;
    const auto kd = static_cast<double>(k);
    const auto nd = static_cast<double>(n);
    RateEstimate r;
    r.k = k;
    r.n = n;
    r.confidence = confidence;
    r.point = kd / nd;
    // At k = 0 or k = n one side is pinned, so the other takes the whole alpha.
    const double tail = (k == 0 || k == n) ? alpha : alpha / 2.0;
    r.lower = k == 0 ? 0.0 : boost::math::ibeta_inv(kd, nd - kd + 1.0, tail);
    r.upper = k == n ? 1.0 : boost::math::ibeta_inv(kd + 1.0, nd - kd, 1.0 - tail);
    return r;
}

std::string to_string(SuccessCriterion c) {
    switch (c) {
        case SuccessCriterion::same_well: return "same_well";
        case SuccessCriterion::target_well: return "target_well";
        case SuccessCriterion::within_one_well_of_target: return "within_one_well_of_target";
        case SuccessCriterion::pair_intact: return "pair_intact";
        case SuccessCriterion::pair_lost: return "pair_lost";
    }
    return "unknown";
}

RateEstimate success_rate(std::span<const TrialRecord> records, SuccessCriterion criterion, double target_distance,
                          double period, double confidence) {
    if (!(period > 0.0)) throw DomainError("success_rate: period must be > 0");
    TrapConfig lattice;
    lattice.wavelength = 2.0 * period;
    const long target_wells = nearest_well(lattice, target_distance).index;

    std::uint64_t k = 0;
    std::uint64_t n = 0;
    for (const auto& r : records) {
        if (!r.post_selected) continue;
        ++n;
        const bool intact = r.alive_1 && r.alive_2;
        bool ok = false;
        switch (criterion) {
            case SuccessCriterion::same_well: ok = r.same_well; break;
            case SuccessCriterion::target_well: ok = intact && r.insert_valid && r.insert_well_sep == target_wells; break;
            case SuccessCriterion::within_one_well_of_target:
                ok = intact && r.insert_valid && std::abs(r.insert_well_sep - target_wells) <= 1;
                break;
            case SuccessCriterion::pair_intact: ok = intact; break;
            case SuccessCriterion::pair_lost: ok = !r.alive_1 && !r.alive_2; break;
        }
        if (ok) ++k;
    }
    if (n == 0) throw DomainError("success_rate: no post-selected records");
    return binomial_ci(k, n, confidence);
}

SampleStats sample_stats(std::span<const double> values) {
    SampleStats s;
    s.n = values.size();
    if (s.n == 0) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n < 2) return s;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    return s;
}

}  // namespace twotrap
