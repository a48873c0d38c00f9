#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "nuentangle/bell.hpp"
#include "nuentangle/errors.hpp"
#include "nuentangle/parallel.hpp"
#include "nuentangle/random.hpp"

namespace nuent {

/// Multistart search settings for the Hardy-ratio maximization.
///
/// The objective is h(t_l1, t_l2, t_r1, t_r2) subject to
/// h_denominator >= den_min; infeasible points score -inf. The fast phase
/// rate (248 rad per unit s) makes the landscape oscillate with period
/// ~0.025 per coordinate, hence many local maxima and the multistart count.
struct OptimizerConfig {
    std::array<double, 4> lo{1e-5, 1e-5, 1e-5, 1e-5};
    std::array<double, 4> hi{0.6, 0.6, 0.6, 0.6};
    double den_min = 0.1;
    int n_starts = 256;
    std::uint64_t seed = 42;
    int max_iters = 500;
    double tol_h = 1e-8;     // convergence: simplex value spread
    double step_frac = 0.05; // initial simplex step, fraction of box width

    void validate() const {
        for (int d = 0; d < 4; ++d)
            if (!(lo[d] <= hi[d])) throw std::invalid_argument("optimizer bounds need lo <= hi");
        if (!(den_min > 0.0)) throw std::invalid_argument("den_min must be positive");
        if (n_starts < 1) throw std::invalid_argument("n_starts must be >= 1");
    }
};

struct OptimizerResult {
    BellTimes best_times{};
    BellResult best{};
    long long n_evals = 0;
    int best_start = 0;
    std::vector<double> per_start_best; // maximize_h: best h per start (-inf if infeasible)
    std::vector<double> trace;          // refine_local: best-so-far h per iteration
};

namespace detail {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

struct Objective {
    const OptimizerConfig& cfg;
    const OscillationParams& p;
    const MixingMatrix& m;
    long long evals = 0;

    double operator()(const std::array<double, 4>& x) {
        ++evals;
        for (int d = 0; d < 4; ++d)
            if (x[d] < cfg.lo[d] || x[d] > cfg.hi[d]) return neg_inf;
        const BellResult r = h_value({x[0], x[1], x[2], x[3]}, p, m);
        if (r.h_denominator < cfg.den_min) return neg_inf;
        return r.h_numerator / r.h_denominator;
    }
};

struct LocalBest {
    std::array<double, 4> x{};
    double f = neg_inf;
    std::vector<double> trace;
};

/// Bounded Nelder-Mead ascent (reflect 1, expand 2, contract 1/2, shrink 1/2).
/// Candidates are clamped into the box; the denominator floor is enforced by
/// the -inf score on infeasible points.
inline LocalBest nelder_mead(const std::array<double, 4>& x0, Objective& obj,
                             const OptimizerConfig& cfg, bool keep_trace) {
    constexpr int n = 4;
    auto clamp = [&](std::array<double, 4> v) {
        for (int d = 0; d < n; ++d) v[d] = std::clamp(v[d], cfg.lo[d], cfg.hi[d]);
        return v;
    };

    std::array<std::array<double, 4>, n + 1> sx;
    std::array<double, n + 1> sf;
    sx[0] = clamp(x0);
    sf[0] = obj(sx[0]);
    for (int d = 0; d < n; ++d) {
        auto v = sx[0];
        const double step = cfg.step_frac * (cfg.hi[d] - cfg.lo[d]);
        v[d] = std::clamp(v[d] + step, cfg.lo[d], cfg.hi[d]);
        if (v[d] == sx[0][d]) v[d] = std::clamp(sx[0][d] - step, cfg.lo[d], cfg.hi[d]);
        sx[d + 1] = v;
        sf[d + 1] = obj(v);
    }

    LocalBest best;
    auto consider = [&](const std::array<double, 4>& x, double f) {
        if (f > best.f) {
            best.f = f;
            best.x = x;
        }
    };
    for (int k = 0; k <= n; ++k) consider(sx[k], sf[k]);
    if (keep_trace) best.trace.push_back(best.f);

    for (int it = 0; it < cfg.max_iters; ++it) {
        std::array<int, n + 1> ord;
        for (int k = 0; k <= n; ++k) ord[k] = k;
        std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return sf[a] > sf[b]; });
        const auto tx = sx;
        const auto tf = sf;
        for (int k = 0; k <= n; ++k) {
            sx[k] = tx[ord[k]];
            sf[k] = tf[ord[k]];
        }

        if (sf[n] > neg_inf && (sf[0] - sf[n]) < cfg.tol_h) {
            if (keep_trace) best.trace.push_back(best.f);
            break;
        }

        std::array<double, 4> centroid{};
        for (int k = 0; k < n; ++k)
            for (int d = 0; d < n; ++d) centroid[d] += sx[k][d] / n;

        auto blend = [&](double coef) {
            std::array<double, 4> v;
            for (int d = 0; d < n; ++d) v[d] = centroid[d] + coef * (centroid[d] - sx[n][d]);
            return clamp(v);
        };

        const auto xr = blend(1.0);
        const double fr = obj(xr);
        consider(xr, fr);
        if (fr > sf[0]) {
            const auto xe = blend(2.0);
            const double fe = obj(xe);
            consider(xe, fe);
            if (fe > fr) {
                sx[n] = xe;
                sf[n] = fe;
            } else {
                sx[n] = xr;
                sf[n] = fr;
            }
        } else if (fr > sf[n - 1]) {
            sx[n] = xr;
            sf[n] = fr;
        } else {
            const auto xc = blend(-0.5);
            const double fc = obj(xc);
            consider(xc, fc);
            if (fc > sf[n]) {
                sx[n] = xc;
                sf[n] = fc;
            } else {
                for (int k = 1; k <= n; ++k) {
                    for (int d = 0; d < n; ++d) sx[k][d] = sx[0][d] + 0.5 * (sx[k][d] - sx[0][d]);
                    sx[k] = clamp(sx[k]);
                    sf[k] = obj(sx[k]);
                    consider(sx[k], sf[k]);
                }
            }
        }
        if (keep_trace) best.trace.push_back(best.f);
    }
    return best;
}

inline OptimizerResult result_from(const LocalBest& lb, const OscillationParams& p,
                                   const MixingMatrix& m) {
    OptimizerResult out;
    out.best_times = {lb.x[0], lb.x[1], lb.x[2], lb.x[3]};
    out.best = h_value(out.best_times, p, m);
    out.trace = lb.trace;
    return out;
}

} // namespace detail

/// Single bounded Nelder-Mead ascent from `start`. The best-so-far value is
/// nondecreasing across iterations (exposed in OptimizerResult::trace).
inline OptimizerResult refine_local(const BellTimes& start, const OptimizerConfig& cfg,
                                    const OscillationParams& p, const MixingMatrix& m) {
    cfg.validate();
    detail::Objective obj{cfg, p, m};
    const std::array<double, 4> x0{start.l1, start.l2, start.r1, start.r2};
    const detail::LocalBest lb = detail::nelder_mead(x0, obj, cfg, /*keep_trace=*/true);
    if (lb.f == detail::neg_inf)
        throw NoFeasiblePoint("refine_local: no probe reached h_denominator >= den_min");
    OptimizerResult out = detail::result_from(lb, p, m);
    out.n_evals = obj.evals;
    return out;
}

/// Seeded multistart maximization. Start points are uniform in the bounds,
/// one independent SplitMix64 substream per start, so the result is
/// bit-identical for a given seed at any worker count. Ties between equal
/// optima go to the lowest start index.
inline OptimizerResult maximize_h(const OptimizerConfig& cfg, const OscillationParams& p,
                                  const MixingMatrix& m) {
    cfg.validate();
    const std::size_t n = static_cast<std::size_t>(cfg.n_starts);
    std::vector<detail::LocalBest> bests(n);
    std::vector<long long> evals(n, 0);

    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            SplitMix64 rng = SplitMix64::substream(cfg.seed, s);
            std::array<double, 4> x0;
            for (int d = 0; d < 4; ++d) x0[d] = rng.next_in(cfg.lo[d], cfg.hi[d]);
            detail::Objective obj{cfg, p, m};
            bests[s] = detail::nelder_mead(x0, obj, cfg, /*keep_trace=*/false);
            evals[s] = obj.evals;
        }
    });

    std::size_t winner = n;
    for (std::size_t s = 0; s < n; ++s) {
        if (bests[s].f == detail::neg_inf) continue;
        if (winner == n || bests[s].f > bests[winner].f) winner = s;
    }
    if (winner == n) throw NoFeasiblePoint("maximize_h: no start reached h_denominator >= den_min");

    OptimizerResult out = detail::result_from(bests[winner], p, m);
    out.best_start = static_cast<int>(winner);
    out.per_start_best.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        out.per_start_best[s] = bests[s].f;
        out.n_evals += evals[s];
    }
    return out;
}

} // namespace nuent
