#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "nuentangle/bell.hpp"
#include "nuentangle/errors.hpp"
#include "nuentangle/oscillation.hpp"
#include "nuentangle/random.hpp"

namespace nuent {

/// Tau-decay source model: masses in GeV, pair energy window, and the
/// half-width of the energy-difference variable eps.
struct SourceConfig {
    double m_tau = 1.77686;      // GeV
    double m_mu = 0.10566;       // GeV
    double g_fermi = 1.16637e-5; // GeV^-2, enters the overall rate only
    double e_min = 0.095;        // GeV
    double e_max = 0.12;         // GeV
    double eps_halfwidth = 0.005; // GeV

    /// Upper edge of the positivity domain of the spectral shape.
    double e_cap() const { return std::min(2.0 * m_mu, 0.5 * m_tau); }

    void validate() const {
        if (!(0.0 < e_min && e_min < e_max && e_max <= e_cap()))
            throw std::invalid_argument("energy window must satisfy 0 < e_min < e_max <= cap");
        if (eps_halfwidth < 0.0) throw std::invalid_argument("eps_halfwidth must be >= 0");
    }
};

/// Unnormalized pair-energy spectral shape
///   (m_mu - E/2) (m_tau - 2E)^2 E^4.
/// The overall factor 6 G_F^2 / (pi^5 m_mu^4) is dropped: sampling only needs
/// the shape (see spectral_prefactor).
inline double spectral_density(double e_gev, const SourceConfig& cfg) {
    if (!(e_gev >= 0.0 && e_gev <= cfg.e_cap()))
        throw OutOfDomain("spectral_density: energy outside the positivity domain");
    const double a = cfg.m_mu - 0.5 * e_gev;
    const double b = cfg.m_tau - 2.0 * e_gev;
    const double e2 = e_gev * e_gev;
    return a * b * b * e2 * e2;
}

/// The dropped constant factor of the differential width, GeV^-9.
inline double spectral_prefactor(const SourceConfig& cfg) {
    const double pi = 3.14159265358979323846;
    const double mu2 = cfg.m_mu * cfg.m_mu;
    return 6.0 * cfg.g_fermi * cfg.g_fermi / (std::pow(pi, 5) * mu2 * mu2);
}

/// Location of the spectral maximum on [lo, hi] by golden-section search.
/// The log-derivative 4/E - 4/(m_tau - 2E) - 0.5/(m_mu - E/2) is strictly
/// decreasing, so the shape is unimodal and the search is exact.
inline double spectral_mode(const SourceConfig& cfg, double lo, double hi) {
    auto f = [&](double e) { return spectral_density(e, cfg); };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 300 && (b - a) > 1e-13; ++it) {
        if (f1 > f2) {
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
    return 0.5 * (a + b);
}

/// One sampled pair: mean energy E and half the energy difference eps.
struct EnergySample {
    double e_mean = 0.0; // GeV
    double eps = 0.0;    // GeV
};

/// Rejection sampler for the pair energy. The envelope is the exact window
/// maximum of the spectral shape (unimodality makes it the larger of the
/// window edges and the interior mode), computed once at construction.
/// eps is uniform in [-eps_halfwidth, +eps_halfwidth]; the shape does not
/// depend on it.
class PairEnergySampler {
  public:
    explicit PairEnergySampler(const SourceConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        const double mode = spectral_mode(cfg, 1e-9, cfg.e_cap() - 1e-12);
        fmax_ = std::max(spectral_density(cfg.e_min, cfg), spectral_density(cfg.e_max, cfg));
        if (mode > cfg.e_min && mode < cfg.e_max)
            fmax_ = std::max(fmax_, spectral_density(mode, cfg));
    }

    EnergySample operator()(SplitMix64& rng) const {
        EnergySample out;
        for (;;) {
            const double e = rng.next_in(cfg_.e_min, cfg_.e_max);
            const double v = rng.next_unit() * fmax_;
            if (v <= spectral_density(e, cfg_)) {
                out.e_mean = e;
                break;
            }
        }
        out.eps = -cfg_.eps_halfwidth + rng.next_unit() * 2.0 * cfg_.eps_halfwidth;
        return out;
    }

    double envelope() const { return fmax_; }

  private:
    SourceConfig cfg_;
    double fmax_ = 0.0;
};

/// One-shot convenience over PairEnergySampler.
inline EnergySample sample_pair_energy(const SourceConfig& cfg, SplitMix64& rng) {
    return PairEnergySampler(cfg)(rng);
}

/// km of travel corresponding to s units at pair energy E:
///   L = s * E(GeV) * 1e5 / 2.54.
inline double s_to_distance(double s, double e_gev) {
    if (s < 0.0 || e_gev < 0.0) throw std::invalid_argument("s_to_distance: negative input");
    return s * e_gev * (1e5 / 2.54);
}

/// Inverse of s_to_distance.
inline double distance_to_s(double l_km, double e_gev) {
    if (l_km < 0.0) throw std::invalid_argument("distance_to_s: negative distance");
    if (e_gev <= 0.0) throw ZeroEnergy("distance_to_s: energy must be positive");
    return l_km * 2.54 / (e_gev * 1e5);
}

/// CH/Hardy evaluation with the four detectors pinned in space and the pair
/// energy spread uniformly over [E(1-spread/2), E(1+spread/2)]. Each of the
/// six probability terms is averaged over energy by composite Simpson
/// quadrature (n_nodes odd, default 129), then the ratio is assembled from
/// the averaged terms. At spread 0 this degenerates to h_value at the
/// corresponding times. Distances are (L_l1, L_l2, L_r1, L_r2) in km.
inline BellResult smeared_bell(const std::array<double, 4>& distances_km, double e_center,
                               double spread, const OscillationParams& p, const MixingMatrix& m,
                               int n_nodes = 129, double den_guard = default_denominator_guard) {
    if (spread < 0.0) throw std::invalid_argument("smeared_bell: spread must be >= 0");
    if (e_center <= 0.0) throw ZeroEnergy("smeared_bell: energy must be positive");

    auto times_at = [&](double e) {
        return BellTimes{distance_to_s(distances_km[0], e), distance_to_s(distances_km[1], e),
                         distance_to_s(distances_km[2], e), distance_to_s(distances_km[3], e)};
    };

    if (spread == 0.0 || n_nodes <= 1) return h_value(times_at(e_center), p, m, den_guard);

    if (n_nodes % 2 == 0) ++n_nodes; // Simpson needs an even panel count
    const double e_lo = e_center * (1.0 - 0.5 * spread);
    const double e_hi = e_center * (1.0 + 0.5 * spread);

    double joint[4] = {0, 0, 0, 0};
    double marg_r2 = 0.0, marg_l1 = 0.0, wsum = 0.0;
    for (int k = 0; k < n_nodes; ++k) {
        const double w = (k == 0 || k == n_nodes - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        const double e = e_lo + (e_hi - e_lo) * k / (n_nodes - 1);
        const BellResult r = h_value(times_at(e), p, m, den_guard);
        joint[0] += w * r.p_l2e_r2mu;
        joint[1] += w * r.p_l2e_r1e;
        joint[2] += w * r.p_l1mu_r2mu;
        joint[3] += w * r.p_l1mu_r1e;
        marg_r2 += w * r.p_r2mu_marginal;
        marg_l1 += w * r.p_l1mu_marginal;
        wsum += w;
    }
    for (double& j : joint) j /= wsum;
    return detail::bell_terms_from(joint, marg_r2 / wsum, marg_l1 / wsum, den_guard);
}

} // namespace nuent
