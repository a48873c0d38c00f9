#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nuentangle/oscillation.hpp"
#include "nuentangle/parallel.hpp"
#include "nuentangle/random.hpp"

namespace nuent {

/// Eavesdropper placement: equal-time flavor measurement of both particles at
/// t_e, followed by a resend of the observed product state.
struct EveConfig {
    double t_e = 0.0;
};

/// Protocol layout. Alice and Bob sit at equal distances from the source:
/// baseline 1 detects both particles at t1, baseline 2 at t2. Each pair is
/// routed to one of the two baselines by a uniform coin.
struct QkdConfig {
    double t1 = 0.15;
    double t2 = 0.45;
    long long n_pairs = 100000;
    double efficiency = 1.0; // per-detector; a pair counts only if both fire
    std::optional<EveConfig> eve;
    std::uint64_t seed = 42;
    long long alarm_threshold = 0; // max tolerated same-flavor coincidences
    bool record_events = false;

    void validate() const {
        if (!(0.0 <= t1 && t1 < t2)) throw std::invalid_argument("need 0 <= t1 < t2");
        if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
        if (!(efficiency >= 0.0 && efficiency <= 1.0))
            throw std::invalid_argument("efficiency must be in [0, 1]");
        if (eve && !(eve->t_e >= 0.0 && eve->t_e < t1))
            throw std::invalid_argument("Eve must intercept before the first baseline");
    }
};

struct BaselineStats {
    std::array<std::array<long long, 3>, 3> counts{}; // [alice][bob], detected pairs only
    long long detected = 0;
    long long undetected = 0;
    long long same_flavor = 0;
    long long discarded_tau = 0; // detected pairs with a tau on either side

    double same_flavor_rate() const {
        return detected > 0 ? static_cast<double>(same_flavor) / static_cast<double>(detected) : 0.0;
    }
};

struct QkdEvent {
    long long pair_index = 0;
    int baseline = 1;
    Flavor alice = Flavor::e;
    Flavor bob = Flavor::e;
    bool detected = true;
    int sifted_bit = -1; // Alice's bit; -1 when the event did not sift
};

struct QkdReport {
    std::array<BaselineStats, 2> baseline{};
    long long sifted_count = 0;
    std::string alice_bits; // '0' for nu_e, '1' for nu_mu
    std::string bob_bits;   // same encoding; Bob flips his bits to read the key
    long long same_flavor_total = 0;
    bool alarm = false;
    std::vector<QkdEvent> events; // only populated when record_events is set

    long long detected_total() const { return baseline[0].detected + baseline[1].detected; }
};

/// Probability that the two halves of a *product* pair (a, b) show the same
/// flavor after tau units of independent evolution:
///   sum_alpha P(a->alpha)(tau) P(b->alpha)(tau).
inline double product_same_flavor_prob(Flavor a, Flavor b, double tau,
                                       const OscillationParams& p, const MixingMatrix& m) {
    double s = 0.0;
    for (Flavor al : all_flavors)
        s += osc_probability(a, al, tau, p, m) * osc_probability(b, al, tau, p, m);
    return s;
}

/// Smallest T > 0 below `cutoff` at which the single-particle evolution
/// repeats: every phase rate must be an integer multiple of 2*pi/T within
/// `tol` radians. Candidates are exact periods of the fastest rate. Returns
/// nullopt when the rates are incommensurate at this tolerance/cutoff.
inline std::optional<double> same_flavor_zero_period(const OscillationParams& p,
                                                     const MixingMatrix& /*m*/,
                                                     double cutoff = 10.0, double tol = 1e-9) {
    const auto om = p.omega();
    const double two_pi = 2.0 * 3.14159265358979323846;
    double om_max = 0.0;
    for (double w : om) om_max = std::max(om_max, std::abs(w));
    if (om_max < tol) return std::nullopt; // no oscillation at all

    const double rates[3] = {om[1] - om[0], om[2] - om[0], om[2] - om[1]};
    for (int k = 1;; ++k) {
        const double T = two_pi * k / om_max;
        if (T > cutoff) return std::nullopt;
        bool ok = true;
        for (double d : rates) {
            const double cycles = d * T / two_pi;
            if (std::abs(d * T - two_pi * std::round(cycles)) > tol) {
                ok = false;
                break;
            }
        }
        if (ok) return T;
    }
}

namespace detail {

/// Joint-outcome CDF over the 9 flavor cells of an equal-time coincidence
/// table. Cells below 1e-12 are dropped: at equal times the diagonal is
/// analytically zero and only floating-point residue remains, and the
/// protocol's alarm logic relies on those outcomes being impossible.
struct JointCdf {
    std::array<double, 9> cum{};

    explicit JointCdf(const CoincidenceTable& tbl) {
        double run = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                const double w = tbl.p[a][b] > 1e-12 ? tbl.p[a][b] : 0.0;
                run += w;
                cum[a * 3 + b] = run;
            }
        for (double& c : cum) c /= run;
    }

    std::pair<Flavor, Flavor> draw(double u) const {
        for (int c = 0; c < 9; ++c)
            if (u < cum[c]) return {static_cast<Flavor>(c / 3), static_cast<Flavor>(c % 3)};
        return {Flavor::tau, Flavor::tau}; // u == 1 edge; unreachable for u in [0,1)
    }
};

/// Single-particle flavor CDF after tau units of evolution from `from`.
struct FlavorCdf {
    std::array<double, 3> cum{};

    FlavorCdf(Flavor from, double tau, const OscillationParams& p, const MixingMatrix& m) {
        double run = 0.0;
        for (int b = 0; b < 3; ++b) {
            const double w = std::max(0.0, osc_probability(from, static_cast<Flavor>(b), tau, p, m));
            run += w;
            cum[b] = run;
        }
        for (double& c : cum) c /= run;
    }

    Flavor draw(double u) const {
        for (int b = 0; b < 3; ++b)
            if (u < cum[b]) return static_cast<Flavor>(b);
        return Flavor::tau;
    }
};

} // namespace detail

/// Monte Carlo run of the key-distribution protocol.
///
/// Per pair (independent SplitMix64 substream keyed by pair index, so the run
/// is reproducible at any parallelism): route to a baseline; draw the joint
/// outcome from the entangled equal-time table, or, under interception, draw
/// Eve's equal-time outcome first and then Alice's and Bob's flavors
/// independently from the resent product state over the remaining time;
/// apply per-side detection efficiency; sift anti-correlated e/mu outcomes
/// into key bits (nu_e -> 0, nu_mu -> 1 for Alice; Bob inverts on readout).
/// Any same-flavor coincidence feeds the alarm statistic.
inline QkdReport run_protocol(const QkdConfig& cfg, const OscillationParams& p,
                              const MixingMatrix& m) {
    cfg.validate();
    const long long n = cfg.n_pairs;

    const detail::JointCdf entangled_b1(coincidence_table(cfg.t1, cfg.t1, p, m));
    const detail::JointCdf entangled_b2(coincidence_table(cfg.t2, cfg.t2, p, m));
    std::optional<detail::JointCdf> eve_cdf;
    // With Eve in place, the product state evolves over t_b - t_e per side;
    // 3 resent flavors x 2 baselines single-particle CDFs cover all draws.
    std::array<std::array<detail::FlavorCdf, 3>, 2> resent{{
        {{{Flavor::e, 0.0, p, m}, {Flavor::mu, 0.0, p, m}, {Flavor::tau, 0.0, p, m}}},
        {{{Flavor::e, 0.0, p, m}, {Flavor::mu, 0.0, p, m}, {Flavor::tau, 0.0, p, m}}},
    }};
    if (cfg.eve) {
        eve_cdf.emplace(coincidence_table(cfg.eve->t_e, cfg.eve->t_e, p, m));
        const double rest[2] = {cfg.t1 - cfg.eve->t_e, cfg.t2 - cfg.eve->t_e};
        for (int b = 0; b < 2; ++b)
            for (int f = 0; f < 3; ++f)
                resent[b][f] = detail::FlavorCdf(static_cast<Flavor>(f), rest[b], p, m);
    }

    struct PairOutcome {
        std::int8_t baseline;
        std::int8_t alice;
        std::int8_t bob;
        std::int8_t detected;
    };
    std::vector<PairOutcome> outcomes(static_cast<std::size_t>(n));

    parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            SplitMix64 rng = SplitMix64::substream(cfg.seed, i);
            const int b = rng.next_unit() < 0.5 ? 0 : 1;
            Flavor alice, bob;
            if (cfg.eve) {
                const auto [ea, eb] = eve_cdf->draw(rng.next_unit());
                alice = resent[b][index_of(ea)].draw(rng.next_unit());
                bob = resent[b][index_of(eb)].draw(rng.next_unit());
            } else {
                const auto [a2, b2] = (b == 0 ? entangled_b1 : entangled_b2).draw(rng.next_unit());
                alice = a2;
                bob = b2;
            }
            bool detected = true;
            if (cfg.efficiency < 1.0) {
                detected = rng.next_unit() < cfg.efficiency;
                detected = (rng.next_unit() < cfg.efficiency) && detected;
            }
            outcomes[i] = {static_cast<std::int8_t>(b), static_cast<std::int8_t>(index_of(alice)),
                           static_cast<std::int8_t>(index_of(bob)),
                           static_cast<std::int8_t>(detected ? 1 : 0)};
        }
    });

    QkdReport rep;
    if (cfg.record_events) rep.events.reserve(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) {
        const PairOutcome& o = outcomes[static_cast<std::size_t>(i)];
        BaselineStats& bs = rep.baseline[o.baseline];
        int bit = -1;
        if (!o.detected) {
            ++bs.undetected;
        } else {
            ++bs.detected;
            ++bs.counts[o.alice][o.bob];
            if (o.alice == o.bob) ++bs.same_flavor;
            if (o.alice == 2 || o.bob == 2) ++bs.discarded_tau;
            const bool sift = (o.alice == 0 && o.bob == 1) || (o.alice == 1 && o.bob == 0);
            if (sift) {
                bit = o.alice; // e -> 0, mu -> 1
                rep.alice_bits.push_back(static_cast<char>('0' + o.alice));
                rep.bob_bits.push_back(static_cast<char>('0' + o.bob));
                ++rep.sifted_count;
            }
        }
        if (cfg.record_events)
            rep.events.push_back({i, o.baseline + 1, static_cast<Flavor>(o.alice),
                                  static_cast<Flavor>(o.bob), o.detected != 0, bit});
    }
    rep.same_flavor_total = rep.baseline[0].same_flavor + rep.baseline[1].same_flavor;
    rep.alarm = rep.same_flavor_total > cfg.alarm_threshold;
    return rep;
}

/// Worst-case exposure of an intercept-resend attack for a given baseline
/// spacing: minimum over interception points t_e in [0, baseline1] of the
/// larger expected same-flavor rate of the two baselines, where the
/// expectation mixes product_same_flavor_prob over Eve's equal-time outcome
/// distribution. Strictly positive means no hiding spot exists. baseline1 < 0
/// selects one full evolution period (the natural scan window).
inline double eve_detectability(double spacing, const OscillationParams& p, const MixingMatrix& m,
                                double baseline1 = -1.0, int n_grid = 10000) {
    if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
    double t1 = baseline1;
    if (t1 < 0.0) {
        const auto period = same_flavor_zero_period(p, m);
        if (!period)
            throw std::invalid_argument(
                "eve_detectability: no evolution period below cutoff; pass baseline1 explicitly");
        t1 = *period;
    }
    const double t2 = t1 + spacing;

    auto mixed_rate = [&](const CoincidenceTable& w, double te, double tb) {
        double r = 0.0;
        for (Flavor a : all_flavors)
            for (Flavor b : all_flavors) {
                const double wa = w(a, b);
                if (wa > 1e-12) r += wa * product_same_flavor_prob(a, b, tb - te, p, m);
            }
        return r;
    };

    std::vector<double> worst(static_cast<std::size_t>(n_grid) + 1);
    parallel_for(worst.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const double te = t1 * static_cast<double>(k) / n_grid;
            const CoincidenceTable w = coincidence_table(te, te, p, m);
            worst[k] = std::max(mixed_rate(w, te, t1), mixed_rate(w, te, t2));
        }
    });
    double lowest = worst[0];
    for (double v : worst) lowest = std::min(lowest, v);
    return lowest;
}

} // namespace nuent
