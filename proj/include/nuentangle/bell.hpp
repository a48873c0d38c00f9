#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nuentangle/errors.hpp"
#include "nuentangle/oscillation.hpp"
#include "nuentangle/parallel.hpp"

namespace nuent {

/// The four detection times of a CH/Hardy configuration, in s-units.
struct BellTimes {
    double l1 = 0.0;
    double l2 = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;

    double operator[](int axis) const {
        switch (axis) {
        case 0: return l1;
        case 1: return l2;
        case 2: return r1;
        default: return r2;
        }
    }
    double& operator[](int axis) {
        switch (axis) {
        case 0: return l1;
        case 1: return l2;
        case 2: return r1;
        default: return r2;
        }
    }
};

constexpr const char* bell_axis_name(int axis) {
    switch (axis) {
    case 0: return "l1";
    case 1: return "l2";
    case 2: return "r1";
    default: return "r2";
    }
}

/// Ratios H with denominators below this are reported undefined.
constexpr double default_denominator_guard = 1e-9;

/// The six CH probabilities plus the derived CH combination and Hardy ratio.
///
/// ch = p_l2e_r2mu - p_l2e_r1e + p_l1mu_r2mu + p_l1mu_r1e
///      - p_r2mu_marginal - p_l1mu_marginal          (LHVT bound: <= 0)
/// h  = p_l1mu_r2mu / (p_r2mu_marginal - p_l2e_r2mu
///      + p_l1mu_marginal - p_l1mu_r1e + p_l2e_r1e)  (LHVT bound: <= 1)
struct BellResult {
    double p_l2e_r2mu = 0.0;
    double p_l2e_r1e = 0.0;
    double p_l1mu_r2mu = 0.0;
    double p_l1mu_r1e = 0.0;
    double p_r2mu_marginal = 0.0;
    double p_l1mu_marginal = 0.0;

    double ch = 0.0;
    double h_numerator = 0.0;
    double h_denominator = 0.0;
    double h = std::numeric_limits<double>::quiet_NaN();
    bool h_defined = false;
};

namespace detail {

inline BellResult bell_terms_from(const double joint[4], double marg_r2mu, double marg_l1mu,
                                  double den_guard) {
    BellResult r;
    r.p_l2e_r2mu = joint[0];
    r.p_l2e_r1e = joint[1];
    r.p_l1mu_r2mu = joint[2];
    r.p_l1mu_r1e = joint[3];
    r.p_r2mu_marginal = marg_r2mu;
    r.p_l1mu_marginal = marg_l1mu;
    r.ch = r.p_l2e_r2mu - r.p_l2e_r1e + r.p_l1mu_r2mu + r.p_l1mu_r1e - r.p_r2mu_marginal -
           r.p_l1mu_marginal;
    r.h_numerator = r.p_l1mu_r2mu;
    r.h_denominator =
        r.p_r2mu_marginal - r.p_l2e_r2mu + r.p_l1mu_marginal - r.p_l1mu_r1e + r.p_l2e_r1e;
    if (r.h_denominator > den_guard) {
        r.h = r.h_numerator / r.h_denominator;
        r.h_defined = true;
    }
    return r;
}

} // namespace detail

/// Full evaluation of the CH terms and Hardy ratio at one time configuration.
/// H is left undefined (h_defined == false) when the denominator does not
/// exceed den_guard; all terms and ch are still reported.
inline BellResult h_value(const BellTimes& bt, const OscillationParams& p, const MixingMatrix& m,
                          double den_guard = default_denominator_guard) {
    const PairState psi0 = initial_pair_state(m);
    const double joint[4] = {
        coincidence_probability(evolve_pair(psi0, bt.l2, bt.r2, p), Flavor::e, Flavor::mu, m),
        coincidence_probability(evolve_pair(psi0, bt.l2, bt.r1, p), Flavor::e, Flavor::e, m),
        coincidence_probability(evolve_pair(psi0, bt.l1, bt.r2, p), Flavor::mu, Flavor::mu, m),
        coincidence_probability(evolve_pair(psi0, bt.l1, bt.r1, p), Flavor::mu, Flavor::e, m),
    };
    return detail::bell_terms_from(joint, marginal_probability(Side::right, Flavor::mu, bt.r2, p, m),
                                   marginal_probability(Side::left, Flavor::mu, bt.l1, p, m),
                                   den_guard);
}

/// The CH combination alone (violation iff > 0).
inline double ch_value(const BellTimes& bt, const OscillationParams& p, const MixingMatrix& m) {
    return h_value(bt, p, m).ch;
}

/// A 2-D slice through the four-time landscape: two axes vary over half-open
/// ranges, the other two stay at `fixed`.
struct GridScanSpec {
    int axis1 = 1; // index into (l1, l2, r1, r2)
    int axis2 = 2;
    double lo1 = 0.0, hi1 = 0.25;
    double lo2 = 0.0, hi2 = 0.25;
    int res1 = 400;
    int res2 = 400;
    BellTimes fixed{};
    double den_guard = default_denominator_guard;

    void validate() const {
        if (axis1 < 0 || axis1 > 3 || axis2 < 0 || axis2 > 3 || axis1 == axis2)
            throw std::invalid_argument("scan axes must be two distinct time indices");
        if (!(lo1 < hi1) || !(lo2 < hi2)) throw std::invalid_argument("scan range needs lo < hi");
        if (res1 < 2 || res2 < 2) throw std::invalid_argument("scan resolution must be >= 2");
    }
};

/// Dense H grid over a scan spec. Row-major: cell (i1, i2) at i1*res2 + i2.
struct HGrid {
    int axis1 = 0, axis2 = 0;
    std::vector<double> a1, a2;     // axis sample values (half-open grids)
    std::vector<double> h;          // NaN where undefined
    std::vector<std::uint8_t> defined;
    bool any_defined = false;
    double max_h = std::numeric_limits<double>::quiet_NaN();
    int max_i1 = -1, max_i2 = -1;

    std::size_t cell(int i1, int i2) const {
        return static_cast<std::size_t>(i1) * a2.size() + static_cast<std::size_t>(i2);
    }
};

inline HGrid scan_h(const GridScanSpec& spec, const OscillationParams& p, const MixingMatrix& m) {
    spec.validate();
    HGrid g;
    g.axis1 = spec.axis1;
    g.axis2 = spec.axis2;
    g.a1.resize(spec.res1);
    g.a2.resize(spec.res2);
    for (int i = 0; i < spec.res1; ++i) g.a1[i] = spec.lo1 + (spec.hi1 - spec.lo1) * i / spec.res1;
    for (int j = 0; j < spec.res2; ++j) g.a2[j] = spec.lo2 + (spec.hi2 - spec.lo2) * j / spec.res2;
    const std::size_t n = g.a1.size() * g.a2.size();
    g.h.assign(n, std::numeric_limits<double>::quiet_NaN());
    g.defined.assign(n, 0);

    parallel_for(g.a1.size(), [&](std::size_t i1_begin, std::size_t i1_end) {
        for (std::size_t i1 = i1_begin; i1 < i1_end; ++i1) {
            BellTimes bt = spec.fixed;
            bt[spec.axis1] = g.a1[i1];
            for (std::size_t i2 = 0; i2 < g.a2.size(); ++i2) {
                bt[spec.axis2] = g.a2[i2];
                const BellResult r = h_value(bt, p, m, spec.den_guard);
                const std::size_t c = i1 * g.a2.size() + i2;
                if (r.h_defined) {
                    g.h[c] = r.h;
                    g.defined[c] = 1;
                }
            }
        }
    });

    // deterministic reduction: first maximal cell in row-major order
    for (std::size_t c = 0; c < n; ++c) {
        if (!g.defined[c]) continue;
        if (!g.any_defined || g.h[c] > g.max_h) {
            g.any_defined = true;
            g.max_h = g.h[c];
            g.max_i1 = static_cast<int>(c / g.a2.size());
            g.max_i2 = static_cast<int>(c % g.a2.size());
        }
    }
    return g;
}

/// Joint probability of a tau trigger at time t on the scanned side, with the
/// other detector fixed. `fixed_side` names the side of the fixed detector.
inline double tau_contamination(Side fixed_side, double fixed_time, Flavor fixed_flavor, double t,
                                const OscillationParams& p, const MixingMatrix& m) {
    const PairState psi0 = initial_pair_state(m);
    if (fixed_side == Side::left) {
        return coincidence_probability(evolve_pair(psi0, fixed_time, t, p), fixed_flavor,
                                       Flavor::tau, m);
    }
    return coincidence_probability(evolve_pair(psi0, t, fixed_time, p), Flavor::tau, fixed_flavor,
                                   m);
}

struct ContaminationMinimum {
    double t = 0.0;
    double value = 0.0;
};

/// Global minimum of tau_contamination over [lo, hi]: dense scan followed by
/// golden-section refinement around the best sample. The objective is smooth
/// but oscillatory, so the scan picks the basin and the refinement polishes.
inline ContaminationMinimum find_contamination_minimum(Side fixed_side, double fixed_time,
                                                       Flavor fixed_flavor, double lo, double hi,
                                                       const OscillationParams& p,
                                                       const MixingMatrix& m, int n_scan = 10000) {
    if (!(lo <= hi)) throw EmptyRange("find_contamination_minimum: lo > hi");
    auto f = [&](double t) { return tau_contamination(fixed_side, fixed_time, fixed_flavor, t, p, m); };
    if (lo == hi) return {lo, f(lo)};

    if (n_scan < 2) n_scan = 2;
    double best_t = lo, best_v = f(lo);
    for (int k = 1; k <= n_scan; ++k) {
        const double t = lo + (hi - lo) * k / n_scan;
        const double v = f(t);
        if (v < best_v) {
            best_v = v;
            best_t = t;
        }
    }

    // golden-section inside the bracketing scan cells
    const double step = (hi - lo) / n_scan;
    double a = std::max(lo, best_t - step);
    double b = std::min(hi, best_t + step);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-14; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    const double tm = 0.5 * (a + b);
    const double vm = f(tm);
    if (vm < best_v) return {tm, vm};
    return {best_t, best_v};
}

} // namespace nuent
