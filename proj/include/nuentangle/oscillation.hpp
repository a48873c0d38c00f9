#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

namespace nuent {

/// Flavor eigenstates, indexed e=0, mu=1, tau=2.
enum class Flavor : int { e = 0, mu = 1, tau = 2 };

constexpr std::array<Flavor, 3> all_flavors{Flavor::e, Flavor::mu, Flavor::tau};

constexpr int index_of(Flavor f) { return static_cast<int>(f); }

inline const char* name_of(Flavor f) {
    switch (f) {
    case Flavor::e: return "e";
    case Flavor::mu: return "mu";
    default: return "tau";
    }
}

/// Which member of the pair a detector watches.
enum class Side { left, right };

/// Real orthogonal flavor <-> mass change of basis.
/// Row = flavor (e, mu, tau), column = mass index (nu_1, nu_2, nu_3).
struct MixingMatrix {
    std::array<std::array<double, 3>, 3> u{};

    double operator()(Flavor f, int mass) const { return u[index_of(f)][mass]; }

    /// max |U U^T - I|, for orthogonality checks.
    double orthogonality_defect() const {
        double worst = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double dot = 0.0;
                for (int k = 0; k < 3; ++k) dot += u[i][k] * u[j][k];
                worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
            }
        }
        return worst;
    }
};

/// Tri-bimaximal mixing:
///   ( 2/sqrt6   1/sqrt3    0      )
///   (-1/sqrt6   1/sqrt3   1/sqrt2 )
///   (-1/sqrt6   1/sqrt3  -1/sqrt2 )
inline MixingMatrix tribimaximal_matrix() {
    const double s6 = std::sqrt(6.0), s3 = std::sqrt(3.0), s2 = std::sqrt(2.0);
    MixingMatrix m;
    m.u = {{{2.0 / s6, 1.0 / s3, 0.0},
            {-1.0 / s6, 1.0 / s3, 1.0 / s2},
            {-1.0 / s6, 1.0 / s3, -1.0 / s2}}};
    return m;
}

/// Oscillation phase accrued by mass pair (i,j) after s units of travel is
/// 1e5 * dm2_ij[eV^2] * s, i.e. the dimensionless detection coordinate
/// s = L/2E carries the phase rate below.
constexpr double phase_rate_per_ev2 = 1e5;

/// Mass-squared splittings (eV^2) and the phase rates they induce.
/// Energies are measured relative to E_1, so omega[0] == 0 by convention;
/// only differences are observable.
struct OscillationParams {
    double dm2_21 = 8e-5;  // eV^2
    double dm2_32 = 2.4e-3; // eV^2

    double dm2_31() const { return dm2_21 + dm2_32; }

    /// Phase rates (radians per unit s) for nu_1, nu_2, nu_3.
    std::array<double, 3> omega() const {
        return {0.0, phase_rate_per_ev2 * dm2_21, phase_rate_per_ev2 * (dm2_21 + dm2_32)};
    }
};

/// Two-neutrino amplitude matrix in the mass basis:
///   |Psi> = sum_ij amp[i][j] |nu_i> (x) |nu_j>
/// with the left factor first.
struct PairState {
    std::array<std::array<std::complex<double>, 3>, 3> amp{};

    double norm2() const {
        double n = 0.0;
        for (const auto& row : amp)
            for (const auto& a : row) n += std::norm(a);
        return n;
    }
};

/// Mass-basis representation of the antisymmetric flavor pair
/// (nu_e nu_mu - nu_mu nu_e)/sqrt2:
///   amp[i][j] = (U[e][i] U[mu][j] - U[mu][i] U[e][j]) / sqrt2.
/// Antisymmetry is exact by construction.
inline PairState initial_pair_state(const MixingMatrix& m) {
    const double inv_s2 = 1.0 / std::sqrt(2.0);
    PairState st;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            st.amp[i][j] = (m.u[0][i] * m.u[1][j] - m.u[1][i] * m.u[0][j]) * inv_s2;
    return st;
}

/// Free two-time phase evolution:
///   amp'[i][j] = exp(-i (omega_i t_l + omega_j t_r)) amp[i][j].
/// Norm-preserving; omega_1 = 0 fixes the global phase.
inline PairState evolve_pair(const PairState& s0, double t_l, double t_r,
                             const OscillationParams& p) {
    const auto om = p.omega();
    std::array<std::complex<double>, 3> phl, phr;
    for (int k = 0; k < 3; ++k) {
        phl[k] = std::polar(1.0, -om[k] * t_l);
        phr[k] = std::polar(1.0, -om[k] * t_r);
    }
    PairState out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out.amp[i][j] = phl[i] * phr[j] * s0.amp[i][j];
    return out;
}

/// Coincidence probability of flavor a on the left and b on the right:
///   | sum_ij U[a][i] U[b][j] amp[i][j] |^2.
inline double coincidence_probability(const PairState& st, Flavor a, Flavor b,
                                      const MixingMatrix& m) {
    const auto& ua = m.u[index_of(a)];
    const auto& ub = m.u[index_of(b)];
    std::complex<double> amp{0.0, 0.0};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            amp += ua[i] * ub[j] * st.amp[i][j];
    return std::norm(amp);
}

/// All nine joint flavor probabilities at detection times (t_l, t_r).
/// Entries sum to 1; the diagonal vanishes at t_l == t_r.
struct CoincidenceTable {
    std::array<std::array<double, 3>, 3> p{};
    double t_l = 0.0;
    double t_r = 0.0;

    double operator()(Flavor a, Flavor b) const { return p[index_of(a)][index_of(b)]; }

    double sum() const {
        double s = 0.0;
        for (const auto& row : p)
            for (double v : row) s += v;
        return s;
    }

    double row_sum(Flavor a) const {
        const auto& r = p[index_of(a)];
        return r[0] + r[1] + r[2];
    }

    double col_sum(Flavor b) const {
        const int j = index_of(b);
        return p[0][j] + p[1][j] + p[2][j];
    }
};

inline CoincidenceTable coincidence_table(double t_l, double t_r, const OscillationParams& p,
                                          const MixingMatrix& m) {
    const PairState st = evolve_pair(initial_pair_state(m), t_l, t_r, p);
    CoincidenceTable tbl;
    tbl.t_l = t_l;
    tbl.t_r = t_r;
    for (Flavor a : all_flavors)
        for (Flavor b : all_flavors)
            tbl.p[index_of(a)][index_of(b)] = coincidence_probability(st, a, b, m);
    return tbl;
}

/// Single-particle three-flavor vacuum transition probability
///   P(a->b)(s) = delta_ab - 4 sum_{i<j} U[a][i]U[b][i]U[a][j]U[b][j] sin^2(phi_ij/2),
/// phi_ij = (omega_j - omega_i) s. Real mixing matrix, so no CP term.
inline double osc_probability(Flavor a, Flavor b, double s, const OscillationParams& p,
                              const MixingMatrix& m) {
    const auto om = p.omega();
    const auto& ua = m.u[index_of(a)];
    const auto& ub = m.u[index_of(b)];
    double prob = (a == b) ? 1.0 : 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const double half_phase = 0.5 * (om[j] - om[i]) * s;
            const double sn = std::sin(half_phase);
            prob -= 4.0 * ua[i] * ub[i] * ua[j] * ub[j] * sn * sn;
        }
    }
    return prob;
}

/// Single-side detection probability with the partner side untriggered:
/// row (left) or column (right) sum of the coincidence table. Independent of
/// the partner's detection time (no-signaling), so it is evaluated at
/// partner time 0.
inline double marginal_probability(Side side, Flavor f, double t, const OscillationParams& p,
                                   const MixingMatrix& m) {
    if (side == Side::left) {
        return coincidence_table(t, 0.0, p, m).row_sum(f);
    }
    return coincidence_table(0.0, t, p, m).col_sum(f);
}

} // namespace nuent
