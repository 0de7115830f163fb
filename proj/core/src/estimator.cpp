// SPDX-License-Identifier: Apache-2.0
#include "mploc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "mploc/constants.hpp"

namespace mploc {
namespace {

struct Fit {
    Eigen::VectorXcd alpha;
    Eigen::VectorXcd residual;
    double rss = 0.0;
};

double l1_norm(const Eigen::VectorXcd& a) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) s += std::abs(a[i]);
    return s;
}

// Least-squares amplitude fit for fixed delays. The complex system splits
// into two real solves sharing one QR factorization.
Fit fit_delays(const Eigen::VectorXcd& r, const std::vector<double>& delays,
               const PulseModel& pulse) {
    const int k = static_cast<int>(delays.size());
    Fit out;
    if (k == 0) {
        out.alpha.resize(0);
        out.residual = r;
        out.rss = r.squaredNorm();
        return out;
    }

    Eigen::MatrixXd s(r.size(), k);
    for (int j = 0; j < k; ++j) s.col(j) = pulse.sample(delays[j]);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(s);
    if (qr.rank() < k) {
        std::ostringstream msg;
        if (k == 1) {
            msg << "ml_amplitudes: pulse column for delay " << delays[0]
                << " s is numerically zero";
        } else {
            int ia = 0;
            int ib = 1;
            double best = std::numeric_limits<double>::infinity();
            for (int a = 0; a < k; ++a) {
                for (int b = a + 1; b < k; ++b) {
                    const double gap = std::abs(delays[a] - delays[b]);
                    if (gap < best) {
                        best = gap;
                        ia = a;
                        ib = b;
                    }
                }
            }
            msg << "ml_amplitudes: pulse matrix is rank deficient; delays "
                << delays[ia] << " s and " << delays[ib] << " s are too close";
        }
        throw std::runtime_error(msg.str());
    }

    const Eigen::VectorXd re = qr.solve(r.real());
    const Eigen::VectorXd im = qr.solve(r.imag());
    const Eigen::VectorXd mre = s * re;
    const Eigen::VectorXd mim = s * im;

    out.alpha.resize(k);
    for (int j = 0; j < k; ++j) out.alpha[j] = std::complex<double>(re[j], im[j]);
    out.residual.resize(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        out.residual[i] = r[i] - std::complex<double>(mre[i], mim[i]);
    }
    out.rss = out.residual.squaredNorm();
    return out;
}

struct MinResult {
    double x = 0.0;
    double fx = 0.0;
};

// Golden-section minimization; returns the best point seen.
template <class F>
MinResult golden_min(F&& f, double lo, double hi, double tol) {
    constexpr double phi = 0.6180339887498949;
    double a = lo;
    double b = hi;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    MinResult best = f1 <= f2 ? MinResult{x1, f1} : MinResult{x2, f2};
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
            if (f1 < best.fx) best = {x1, f1};
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
            if (f2 < best.fx) best = {x2, f2};
        }
    }
    return best;
}

// Two parabolic-fit rounds sharpen the golden-section result well below the
// formal tolerance, which is what makes noiseless fits terminate on the
// residual floor instead of spawning dust components.
template <class F>
double polish(F&& f, double x, double fx, double lo, double hi, double h0) {
    double h = h0;
    for (int round = 0; round < 2; ++round) {
        const double xl = x - h;
        const double xr = x + h;
        if (xl < lo || xr > hi) break;
        const double fl = f(xl);
        const double fr = f(xr);
        const double denom = fl - 2.0 * fx + fr;
        if (!(denom > 0.0) || !std::isfinite(denom)) break;
        double v = x + 0.5 * h * (fl - fr) / denom;
        v = std::clamp(v, xl, xr);
        const double fv = f(v);
        if (fv < fx) {
            x = v;
            fx = fv;
        }
        h /= 32.0;
    }
    return x;
}

} // namespace

MlFit ml_amplitudes(const Eigen::VectorXcd& r, const std::vector<double>& delays,
                    const PulseModel& pulse) {
    if (r.size() != pulse.length()) {
        throw std::invalid_argument("ml_amplitudes: sample count must match pulse length");
    }
    Fit fit = fit_delays(r, delays, pulse);
    MlFit out;
    out.amplitudes = std::move(fit.alpha);
    out.noise_variance = fit.rss / static_cast<double>(r.size());
    return out;
}

double component_snr(const std::complex<double>& amplitude, double delay,
                     double noise_variance, const PulseModel& pulse) {
    if (!(noise_variance > 0.0)) {
        throw std::invalid_argument("component_snr: noise variance must be positive");
    }
    return std::norm(amplitude) * pulse.sample(delay).squaredNorm() / noise_variance;
}

std::vector<MpcEstimate> estimate_mpcs(const Eigen::VectorXcd& r,
                                       const EstimatorConfig& cfg,
                                       const PulseModel& pulse) {
    if (r.size() != pulse.length()) {
        throw std::invalid_argument("estimate_mpcs: sample count must match pulse length");
    }
    if (cfg.grid_oversampling < 1) {
        throw std::invalid_argument("estimate_mpcs: grid_oversampling must be >= 1");
    }
    if (!(cfg.snr_threshold > 0.0)) {
        throw std::invalid_argument("estimate_mpcs: snr_threshold must be > 0");
    }
    if (cfg.l1_penalty < 0.0) {
        throw std::invalid_argument("estimate_mpcs: l1_penalty must be >= 0");
    }
    if (cfg.max_components < 0 || cfg.refine_iters < 0) {
        throw std::invalid_argument("estimate_mpcs: max_components and refine_iters must be >= 0");
    }

    const int n = pulse.length();
    const int os = cfg.grid_oversampling;
    const double ts = pulse.sample_time();
    const double step = ts / os;
    const int m = n * os;
    const double lambda = cfg.l1_penalty;

    const double total = r.squaredNorm();
    if (!(total > 0.0)) return {};
    // Below this residual the fit is numerically exact; stopping here keeps
    // noiseless inputs from growing scale-free dust components.
    const double rss_floor = 1e-12 * total;

    // Fine-grid pulse table: tab[j + joff] = s(j * step), covering every
    // (sample index, grid delay) lag needed by the matched-filter scan.
    const int joff = m - 1;
    std::vector<double> tab(static_cast<std::size_t>(joff + (n - 1) * os) + 1);
    for (int j = -joff; j <= (n - 1) * os; ++j) {
        tab[static_cast<std::size_t>(j + joff)] = pulse.evaluate(j * step);
    }

    std::vector<double> grid_energy(static_cast<std::size_t>(m));
    for (int g = 0; g < m; ++g) {
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = tab[static_cast<std::size_t>(i * os - g + joff)];
            e += v * v;
        }
        grid_energy[static_cast<std::size_t>(g)] = e;
    }

    // Candidates whose windowed pulse keeps less than a quarter of its
    // energy sit too far outside the observation window to be meaningful.
    constexpr double energy_floor = 0.25;
    const double min_gap = 0.25 * step;
    const double gtol = 1e-3 * ts;
    const double tau_hi = (m - 1) * step;

    std::vector<double> delays;
    Fit fit = fit_delays(r, delays, pulse);

    auto penalized_obj = [&](const Fit& f) {
        if (lambda == 0.0) return f.rss;
        return n * std::log(std::max(f.rss, 1e-300)) + lambda * l1_norm(f.alpha);
    };

    // Negated single-candidate gain against the fixed current residual.
    auto neg_gain = [&](double tau) -> double {
        const Eigen::VectorXd col = pulse.sample(tau);
        const double e = col.squaredNorm();
        if (e < energy_floor) return 0.0;
        std::complex<double> corr{0.0, 0.0};
        for (int i = 0; i < n; ++i) corr += fit.residual[i] * col[i];
        const double drss = std::norm(corr) / e;
        if (lambda == 0.0) return -drss;
        const double rem = std::max(fit.rss - drss, 1e-300);
        return -(n * (std::log(fit.rss) - std::log(rem)) - lambda * std::abs(corr) / e);
    };

    auto scan_grid = [&]() -> int {
        int best = -1;
        double best_score = 0.0;
        for (int g = 0; g < m; ++g) {
            if (grid_energy[static_cast<std::size_t>(g)] < energy_floor) continue;
            bool gapped = false;
            for (double d : delays) {
                if (std::abs(g * step - d) < min_gap) {
                    gapped = true;
                    break;
                }
            }
            if (gapped) continue;
            std::complex<double> corr{0.0, 0.0};
            for (int i = 0; i < n; ++i) {
                corr += fit.residual[i] * tab[static_cast<std::size_t>(i * os - g + joff)];
            }
            const double e = grid_energy[static_cast<std::size_t>(g)];
            const double drss = std::norm(corr) / e;
            double score = drss;
            if (lambda != 0.0) {
                const double rem = std::max(fit.rss - drss, 1e-300);
                score = n * (std::log(fit.rss) - std::log(rem)) - lambda * std::abs(corr) / e;
            }
            if (score > best_score) {
                best_score = score;
                best = g;
            }
        }
        return best;
    };

    // One coordinate-descent sweep set over all delays against the penalized
    // concentrated objective; accepts only improvements, so the fit is
    // monotone in the objective.
    auto refine_all = [&]() {
        const int k = static_cast<int>(delays.size());
        for (int pass = 0; pass < cfg.refine_iters; ++pass) {
            for (int idx = 0; idx < k; ++idx) {
                double lo = std::max(0.0, delays[static_cast<std::size_t>(idx)] - step);
                double hi = std::min(tau_hi, delays[static_cast<std::size_t>(idx)] + step);
                for (int j = 0; j < k; ++j) {
                    if (j == idx) continue;
                    const double dj = delays[static_cast<std::size_t>(j)];
                    if (dj <= delays[static_cast<std::size_t>(idx)]) {
                        lo = std::max(lo, dj + min_gap);
                    } else {
                        hi = std::min(hi, dj - min_gap);
                    }
                }
                if (!(lo < hi)) continue;

                std::vector<double> trial = delays;
                double best_obj = penalized_obj(fit);
                Fit best_fit = fit;
                double best_tau = delays[static_cast<std::size_t>(idx)];
                auto obj = [&](double tau) -> double {
                    trial[static_cast<std::size_t>(idx)] = tau;
                    Fit f2 = fit_delays(r, trial, pulse);
                    const double o = penalized_obj(f2);
                    if (o < best_obj) {
                        best_obj = o;
                        best_fit = std::move(f2);
                        best_tau = tau;
                    }
                    return o;
                };
                const MinResult res = golden_min(obj, lo, hi, gtol);
                polish(obj, res.x, res.fx, lo, hi, gtol);
                delays[static_cast<std::size_t>(idx)] = best_tau;
                fit = std::move(best_fit);
            }
        }
    };

    while (static_cast<int>(delays.size()) < cfg.max_components) {
        if (fit.rss <= rss_floor) break;
        const int g = scan_grid();
        if (g < 0) break;

        const double g_tau = g * step;
        const double lo = std::max(0.0, g_tau - step);
        const double hi = std::min(tau_hi, g_tau + step);
        const MinResult res = golden_min(neg_gain, lo, hi, gtol);
        const double tau_c = polish(neg_gain, res.x, res.fx, lo, hi, gtol);

        bool gapped = false;
        for (double d : delays) {
            if (std::abs(tau_c - d) < min_gap) {
                gapped = true;
                break;
            }
        }
        if (gapped) break;

        std::vector<double> prev_delays = delays;
        Fit prev_fit = fit;
        delays.push_back(tau_c);
        fit = fit_delays(r, delays, pulse);
        refine_all();

        const double sigma2 = std::max(fit.rss, rss_floor) / n;
        const Eigen::Index last = static_cast<Eigen::Index>(delays.size()) - 1;
        const double snr_new =
            std::norm(fit.alpha[last]) * pulse.sample(delays.back()).squaredNorm() / sigma2;
        if (snr_new < cfg.snr_threshold) {
            delays = std::move(prev_delays);
            fit = std::move(prev_fit);
            break;
        }
    }

    // Refinement can redistribute energy between components, so re-check the
    // threshold across the whole set before reporting.
    while (!delays.empty()) {
        const double sigma2 = std::max(fit.rss, rss_floor) / n;
        int worst = -1;
        double worst_snr = std::numeric_limits<double>::infinity();
        for (int j = 0; j < static_cast<int>(delays.size()); ++j) {
            const double s = std::norm(fit.alpha[j]) *
                             pulse.sample(delays[static_cast<std::size_t>(j)]).squaredNorm() /
                             sigma2;
            if (s < worst_snr) {
                worst_snr = s;
                worst = j;
            }
        }
        if (worst_snr >= cfg.snr_threshold) break;
        delays.erase(delays.begin() + worst);
        fit = fit_delays(r, delays, pulse);
    }

    std::vector<MpcEstimate> out(delays.size());
    if (!delays.empty()) {
        const double sigma2 = std::max(fit.rss, rss_floor) / n;
        for (std::size_t j = 0; j < delays.size(); ++j) {
            const Eigen::Index ej = static_cast<Eigen::Index>(j);
            out[j].delay = delays[j];
            out[j].amplitude = fit.alpha[ej];
            out[j].snr = std::norm(fit.alpha[ej]) *
                         pulse.sample(delays[j]).squaredNorm() / sigma2;
        }
        std::sort(out.begin(), out.end(),
                  [](const MpcEstimate& a, const MpcEstimate& b) { return a.delay < b.delay; });
    }
    return out;
}

std::vector<DistanceMeasurement>
to_distance_measurements(const std::vector<MpcEstimate>& estimates) {
    std::vector<DistanceMeasurement> out(estimates.size());
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        out[i].distance = estimates[i].delay * speed_of_light;
        out[i].snr = estimates[i].snr;
    }
    return out;
}

} // namespace mploc
