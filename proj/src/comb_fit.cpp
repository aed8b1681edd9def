#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "twotrap/analysis.hpp"

namespace twotrap {

namespace {

constexpr int kMaxIterations = 500;
constexpr double kRelTol = 1e-8;

struct Shape {
    double center;
    double envelope;
    double peak;
    double phase;
};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Unit-amplitude model counts per bin.
std::vector<double> comb_basis(const Shape& s, const Histogram& h, double period) {
    const std::size_t nb = h.counts.size();
    std::vector<double> m(nb, 0.0);
    if (nb == 0 || !(s.envelope > 0.0) || !(s.peak > 0.0)) return m;
    const double lo = h.origin;
    const double hi = h.bin_lo(nb);
    const double reach = 8.0 * s.peak;
    const auto n_first = static_cast<long>(std::floor((lo - reach - s.phase) / period));
    const auto n_last = static_cast<long>(std::ceil((hi + reach - s.phase) / period));
    for (long n = n_first; n <= n_last; ++n) {
        const double mu = s.phase + static_cast<double>(n) * period;
        const double z = (mu - s.center) / s.envelope;
        const double weight = std::exp(-0.5 * z * z);
        if (weight < 1e-300) continue;
        const auto b_first = static_cast<long>(std::max(0.0, std::floor((mu - reach - lo) / h.bin_width)));
        const auto b_last = static_cast<long>(std::min(static_cast<double>(nb) - 1.0, std::floor((mu + reach - lo) / h.bin_width)));
        if (b_last < b_first) continue;
        double prev = normal_cdf((h.bin_lo(static_cast<std::size_t>(b_first)) - mu) / s.peak);
        for (long b = b_first; b <= b_last; ++b) {
            const double next = normal_cdf((h.bin_lo(static_cast<std::size_t>(b + 1)) - mu) / s.peak);
            m[static_cast<std::size_t>(b)] += weight * (next - prev);
            prev = next;
        }
    }
    return m;
}

struct Evaluation {
    double rss;
    double amplitude;
};

Evaluation evaluate(const Shape& s, const Histogram& h, double period) {
    const auto m = comb_basis(s, h, period);
    double ym = 0.0;
    double mm = 0.0;
    for (std::size_t b = 0; b < m.size(); ++b) {
        ym += static_cast<double>(h.counts[b]) * m[b];
        mm += m[b] * m[b];
    }
    const double a = mm > 0.0 ? ym / mm : 0.0;
    double rss = 0.0;
    for (std::size_t b = 0; b < m.size(); ++b) {
        const double r = static_cast<double>(h.counts[b]) - a * m[b];
        rss += r * r;
    }
    return {rss, a};
}

using Point = std::array<double, 4>;  // center, log envelope, log peak, phase

Shape to_shape(const Point& p) { return {p[0], std::exp(p[1]), std::exp(p[2]), p[3]}; }

struct SimplexResult {
    Point best;
    double value;
    int iterations;
    bool converged;
};

template <typename F>
SimplexResult nelder_mead(F&& f, const Point& start, const Point& step) {
    constexpr std::size_t dim = 4;
    std::array<Point, dim + 1> x;
    std::array<double, dim + 1> fx;
    x[0] = start;
    for (std::size_t i = 0; i < dim; ++i) {
        x[i + 1] = start;
        x[i + 1][i] += step[i];
    }
    for (std::size_t i = 0; i <= dim; ++i) fx[i] = f(x[i]);

    int iter = 0;
    bool converged = false;
    for (; iter < kMaxIterations; ++iter) {
        std::array<std::size_t, dim + 1> order{0, 1, 2, 3, 4};
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        auto xs = x;
        auto fs = fx;
        for (std::size_t i = 0; i <= dim; ++i) {
            x[i] = xs[order[i]];
            fx[i] = fs[order[i]];
        }

        double spread = 0.0;
        for (std::size_t i = 1; i <= dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                spread = std::max(spread, std::abs(x[i][j] - x[0][j]) / std::max(1.0, std::abs(x[0][j])));
            }
        }
        if (spread < kRelTol) {
            converged = true;
            break;
        }

        Point centroid{};
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += x[i][j] / dim;
        }
        const auto along = [&](double t) {
            Point p;
            for (std::size_t j = 0; j < dim; ++j) p[j] = centroid[j] + t * (x[dim][j] - centroid[j]);
            return p;
        };

        const Point xr = along(-1.0);
        const double fr = f(xr);
        if (fr < fx[0]) {
            const Point xe = along(-2.0);
            const double fe = f(xe);
            if (fe < fr) {
                x[dim] = xe;
                fx[dim] = fe;
            } else {
                x[dim] = xr;
                fx[dim] = fr;
            }
        } else if (fr < fx[dim - 1]) {
            x[dim] = xr;
            fx[dim] = fr;
        } else {
            const bool outside = fr < fx[dim];
            const Point xc = along(outside ? -0.5 : 0.5);
            const double fc = f(xc);
            if (fc < (outside ? fr : fx[dim])) {
                x[dim] = xc;
                fx[dim] = fc;
            } else {
                for (std::size_t i = 1; i <= dim; ++i) {
                    for (std::size_t j = 0; j < dim; ++j) x[i][j] = x[0][j] + 0.5 * (x[i][j] - x[0][j]);
                    fx[i] = f(x[i]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= dim; ++i) {
        if (fx[i] < fx[best]) best = i;
    }
    return {x[best], fx[best], iter, converged};
}

void standard_errors(CombFit& fit, const Histogram& h) {
    // Parameters: amplitude, center, envelope, peak, phase.
    const std::array<double, 5> theta{fit.amplitude, fit.center, fit.envelope_width, fit.peak_width, fit.phase};
    const auto model = [&](const std::array<double, 5>& t) {
        auto m = comb_basis({t[1], t[2], t[3], t[4]}, h, fit.period);
        for (auto& v : m) v *= t[0];
        return m;
    };
    const auto base = model(theta);
    const auto nb = static_cast<Eigen::Index>(base.size());
    Eigen::MatrixXd jac(nb, 5);
    for (int j = 0; j < 5; ++j) {
        const double step = 1e-6 * std::max(std::abs(theta[static_cast<std::size_t>(j)]), j == 0 ? 1.0 : fit.period);
        auto up = theta;
        auto dn = theta;
        up[static_cast<std::size_t>(j)] += step;
        dn[static_cast<std::size_t>(j)] -= step;
        const auto mu = model(up);
        const auto md = model(dn);
        for (Eigen::Index b = 0; b < nb; ++b) {
            jac(b, j) = (mu[static_cast<std::size_t>(b)] - md[static_cast<std::size_t>(b)]) / (2.0 * step);
        }
    }
    // Sandwich estimator with Poisson bin variances.
    Eigen::VectorXd var(nb);
    for (Eigen::Index b = 0; b < nb; ++b) var(b) = std::max(base[static_cast<std::size_t>(b)], 1e-12);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (!lu.isInvertible()) return;
    const Eigen::MatrixXd inv = lu.inverse();
    const Eigen::MatrixXd meat = jac.transpose() * var.asDiagonal() * jac;
    const Eigen::MatrixXd cov = inv * meat * inv;
    fit.center_err = std::sqrt(std::max(cov(1, 1), 0.0));
    fit.envelope_width_err = std::sqrt(std::max(cov(2, 2), 0.0));
    fit.peak_width_err = std::sqrt(std::max(cov(3, 3), 0.0));
}

}  // namespace

std::vector<double> comb_model(const CombFit& fit, const Histogram& hist) {
    auto m = comb_basis({fit.center, fit.envelope_width, fit.peak_width, fit.phase}, hist, fit.period);
    for (auto& v : m) v *= fit.amplitude;
    return m;
}

CombFit fit_comb(const Histogram& hist, double period) {
    if (!(period > 0.0)) throw FitError("fit_comb: period must be > 0");
    double total = 0.0;
    double sx = 0.0;
    double sc = 0.0;
    double ss = 0.0;
    std::size_t occupied = 0;
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
        const auto c = static_cast<double>(hist.counts[b]);
        if (c == 0.0) continue;
        ++occupied;
        total += c;
        sx += c * hist.bin_center(b);
        const double ang = 2.0 * std::numbers::pi * hist.bin_center(b) / period;
        sc += c * std::cos(ang);
        ss += c * std::sin(ang);
    }
    if (occupied == 0) throw FitError("fit_comb: empty histogram");

    CombFit fit;
    fit.period = period;
    const double mean = sx / total;
    const double comb_phase = std::atan2(ss, sc) / (2.0 * std::numbers::pi) * period;

    if (occupied == 1) {
        fit.center = mean;
        fit.phase = mean - period * std::floor(mean / period);
        fit.amplitude = total;
        fit.envelope_width = std::numeric_limits<double>::quiet_NaN();
        fit.peak_width = std::numeric_limits<double>::quiet_NaN();
        fit.envelope_identifiable = false;
        fit.peak_width_identifiable = false;
        fit.converged = true;
        return fit;
    }

    // All occupied bins under one tooth: the envelope cannot be resolved.
    long tooth_min = std::numeric_limits<long>::max();
    long tooth_max = std::numeric_limits<long>::min();
    double var = 0.0;
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
        if (hist.counts[b] == 0) continue;
        const auto n = std::lround((hist.bin_center(b) - comb_phase) / period);
        tooth_min = std::min(tooth_min, n);
        tooth_max = std::max(tooth_max, n);
        var += static_cast<double>(hist.counts[b]) * (hist.bin_center(b) - mean) * (hist.bin_center(b) - mean);
    }
    var /= total;
    if (tooth_min == tooth_max) {
        fit.center = comb_phase + static_cast<double>(tooth_min) * period;
        fit.phase = comb_phase - period * std::floor(comb_phase / period);
        fit.amplitude = total;
        fit.peak_width = std::sqrt(std::max(var - hist.bin_width * hist.bin_width / 12.0, 0.0));
        fit.peak_width_identifiable = fit.peak_width > 0.0;
        fit.envelope_width = std::numeric_limits<double>::quiet_NaN();
        fit.envelope_identifiable = false;
        fit.converged = true;
        return fit;
    }

    const auto objective = [&](const Point& p) {
        const double v = evaluate(to_shape(p), hist, period).rss;
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };
    const double env0 = std::max(std::sqrt(var), period / 2.0);
    const double peak0 = std::min(period / 6.0, env0 / 2.0);
    const Point step{period / 4.0, 0.2, 0.2, period / 16.0};

    SimplexResult best{{}, std::numeric_limits<double>::infinity(), 0, false};
    int iterations = 0;
    for (int k = 0; k < 8; ++k) {
        const Point start{mean, std::log(env0), std::log(peak0), period * k / 8.0};
        const auto r = nelder_mead(objective, start, step);
        iterations += r.iterations;
        if (r.value < best.value) best = r;
    }
    const Point polish_step{period / 64.0, 0.02, 0.02, period / 128.0};
    const auto polished = nelder_mead(objective, best.best, polish_step);
    iterations += polished.iterations;
    if (polished.value <= best.value) best = polished;

    const Shape s = to_shape(best.best);
    if (!std::isfinite(s.center) || !std::isfinite(s.envelope) || !std::isfinite(s.peak)) {
        throw FitError("fit_comb: optimizer did not converge to finite parameters");
    }
    fit.center = s.center;
    fit.envelope_width = s.envelope;
    fit.peak_width = s.peak;
    fit.phase = s.phase - period * std::floor(s.phase / period);
    const auto ev = evaluate(s, hist, period);
    fit.amplitude = ev.amplitude;
    fit.residual = ev.rss;
    fit.iterations = iterations;
    fit.converged = polished.converged;
    standard_errors(fit, hist);
    return fit;
}

}  // namespace twotrap
