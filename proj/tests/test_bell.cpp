#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>

#include "nuentangle/bell.hpp"
#include "nuentangle/random.hpp"
#include "oracle.hpp"

using namespace nuent;

namespace {
const MixingMatrix M = tribimaximal_matrix();
const OscillationParams P;
const BellTimes EQ10{0.579497, 0.0579214, 0.0001, 0.180264};
} // namespace

TEST_CASE("ch sits exactly on the classical boundary at zero times") {
    // 1/2 + 1/2 - 1/2 - 1/2
    CHECK_THAT(ch_value({0, 0, 0, 0}, P, M), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("reference configuration: numerator, denominator, H, CH") {
    const BellResult r = h_value(EQ10, P, M);
    CHECK_THAT(r.h_numerator, Catch::Matchers::WithinAbs(0.318213, 1e-3));
    CHECK_THAT(r.h_denominator, Catch::Matchers::WithinAbs(0.18616, 1e-3));
    REQUIRE(r.h_defined);
    CHECK_THAT(r.h, Catch::Matchers::WithinAbs(1.71, 0.02));
    CHECK_THAT(r.ch, Catch::Matchers::WithinAbs(0.132053, 2e-3));

    // frozen oracle values
    CHECK_THAT(r.h_numerator, Catch::Matchers::WithinAbs(0.3182132038340894, 1e-12));
    CHECK_THAT(r.h_denominator, Catch::Matchers::WithinAbs(0.1862299248746522, 1e-12));
    CHECK_THAT(r.h, Catch::Matchers::WithinAbs(1.7087114439221978, 1e-11));

    const oracle::HTerms t = oracle::h_terms(EQ10.l1, EQ10.l2, EQ10.r1, EQ10.r2);
    CHECK_THAT(r.p_l2e_r2mu, Catch::Matchers::WithinAbs(static_cast<double>(t.p_l2e_r2mu), 1e-12));
    CHECK_THAT(r.p_l1mu_r1e, Catch::Matchers::WithinAbs(static_cast<double>(t.p_l1mu_r1e), 1e-12));
    CHECK_THAT(r.p_r2mu_marginal, Catch::Matchers::WithinAbs(static_cast<double>(t.p_inf_r2mu), 1e-12));
}

TEST_CASE("zero-time configuration leaves H undefined but keeps the terms") {
    const BellResult r = h_value({0, 0, 0, 0}, P, M);
    CHECK_FALSE(r.h_defined);
    CHECK(std::isnan(r.h));
    CHECK_THAT(r.h_denominator, Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(r.p_l2e_r2mu, Catch::Matchers::WithinAbs(0.5, 1e-12));
    CHECK_THAT(r.ch, Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("algebraic identity ch = h_num - h_den at random configurations") {
    SplitMix64 rng(4242);
    for (int k = 0; k < 1000; ++k) {
        const BellTimes bt{rng.next_in(0.0, 0.6), rng.next_in(0.0, 0.6), rng.next_in(0.0, 0.6),
                           rng.next_in(0.0, 0.6)};
        const BellResult r = h_value(bt, P, M);
        CHECK_THAT(r.ch, Catch::Matchers::WithinAbs(r.h_numerator - r.h_denominator, 1e-12));
        CHECK(r.p_l2e_r2mu >= 0.0);
        CHECK(r.p_l2e_r2mu <= 1.0);
        CHECK(r.p_r2mu_marginal >= 0.0);
        CHECK(r.p_r2mu_marginal <= 1.0);
        if (r.h_denominator > 0.01) {
            // H > 1 and CH > 0 flag the same violations
            CHECK((r.h > 1.0) == (r.ch > 0.0));
        }
    }
}

TEST_CASE("scan shape contract at resolution 2") {
    GridScanSpec spec;
    spec.axis1 = 1;
    spec.axis2 = 2;
    spec.lo1 = 0.0;
    spec.hi1 = 0.2;
    spec.lo2 = 0.0;
    spec.hi2 = 0.2;
    spec.res1 = 2;
    spec.res2 = 2;
    spec.fixed = EQ10;
    const HGrid g = scan_h(spec, P, M);
    CHECK(g.h.size() == 4);
    CHECK(g.a1.size() == 2);
    CHECK(g.a2[1] == 0.1); // half-open: lo + k (hi-lo)/res
}

TEST_CASE("scan rejects malformed specs") {
    GridScanSpec spec;
    spec.axis1 = 1;
    spec.axis2 = 1;
    CHECK_THROWS_AS(scan_h(spec, P, M), std::invalid_argument);
    spec.axis2 = 2;
    spec.lo1 = 0.3;
    spec.hi1 = 0.1;
    CHECK_THROWS_AS(scan_h(spec, P, M), std::invalid_argument);
    spec.hi1 = 0.5;
    spec.res1 = 1;
    CHECK_THROWS_AS(scan_h(spec, P, M), std::invalid_argument);
}

TEST_CASE("near-site slice reproduces the H maximum") {
    GridScanSpec spec; // defaults: vary (l2, r1) over [0, 0.25)^2 at 400x400
    spec.fixed = EQ10;
    const HGrid g = scan_h(spec, P, M);
    REQUIRE(g.any_defined);
    CHECK(g.max_h >= 1.69);
    CHECK_THAT(g.max_h, Catch::Matchers::WithinAbs(1.7093478435404603, 1e-9));
    CHECK_THAT(g.a1[g.max_i1], Catch::Matchers::WithinAbs(0.0579214, 0.01));
    CHECK_THAT(g.a2[g.max_i2], Catch::Matchers::WithinAbs(0.0001, 0.01));
    // the grid contains (a neighbor of) the reference point, so its max
    // cannot fall below the reference value
    CHECK(g.max_h >= h_value(EQ10, P, M).h - 1e-6);

    std::size_t violating = 0;
    for (std::size_t c = 0; c < g.h.size(); ++c)
        if (g.defined[c] && g.h[c] > 1.0) ++violating;
    CHECK(violating > 0);
}

TEST_CASE("far-site slice has a violation ridge through the reference point") {
    GridScanSpec spec;
    spec.axis1 = 0; // l1
    spec.axis2 = 3; // r2
    spec.lo1 = 0.0;
    spec.hi1 = 0.6;
    spec.lo2 = 0.0;
    spec.hi2 = 0.3;
    spec.fixed = EQ10;
    const HGrid g = scan_h(spec, P, M);
    REQUIRE(g.any_defined);
    CHECK_THAT(g.max_h, Catch::Matchers::WithinAbs(1.71, 0.02));
    CHECK_THAT(g.a1[g.max_i1], Catch::Matchers::WithinAbs(0.579497, 0.01));
    CHECK(g.max_h >= h_value(EQ10, P, M).h - 1e-6);
}

TEST_CASE("scan output is identical at any worker count") {
    GridScanSpec spec;
    spec.res1 = 64;
    spec.res2 = 64;
    spec.fixed = EQ10;
    const HGrid a = scan_h(spec, P, M);
    setenv("NU_ENTANGLE_THREADS", "1", 1);
    const HGrid b = scan_h(spec, P, M);
    setenv("NU_ENTANGLE_THREADS", "7", 1);
    const HGrid c = scan_h(spec, P, M);
    unsetenv("NU_ENTANGLE_THREADS");
    REQUIRE(a.defined == b.defined);
    REQUIRE(a.defined == c.defined);
    for (std::size_t i = 0; i < a.h.size(); ++i) {
        if (!a.defined[i]) continue;
        CHECK(a.h[i] == b.h[i]);
        CHECK(a.h[i] == c.h[i]);
    }
    CHECK(a.max_i1 == c.max_i1);
    CHECK(a.max_i2 == c.max_i2);
}

TEST_CASE("tau contamination at the reference placements") {
    // left detector fixed on nu_e at t_l1, right side scanned as nu_tau
    const double left_case = tau_contamination(Side::left, 0.579497, Flavor::e, 0.02604, P, M);
    CHECK_THAT(left_case, Catch::Matchers::WithinAbs(5.4411529217e-4, 1e-12));
    CHECK(left_case < 1e-3);
    // right detector fixed on nu_mu at t_r2, left side scanned as nu_tau
    const double right_case = tau_contamination(Side::right, 0.180264, Flavor::mu, 0.02568, P, M);
    CHECK_THAT(right_case, Catch::Matchers::WithinAbs(1.8662039027e-3, 1e-12));
    CHECK(right_case < 5e-3);

    CHECK_THAT(left_case,
               Catch::Matchers::WithinAbs(
                   static_cast<double>(oracle::coincidence(0, 2, 0.579497L, 0.02604L)), 1e-12));
}

TEST_CASE("scanning the fixed flavor at the fixed time gives the equal-time zero") {
    CHECK(tau_contamination(Side::left, 0.3, Flavor::tau, 0.3, P, M) < 1e-10);
}

TEST_CASE("contamination minima land on the reference detector placements") {
    const ContaminationMinimum left =
        find_contamination_minimum(Side::left, 0.579497, Flavor::e, 0.02, 0.03, P, M);
    CHECK_THAT(left.t, Catch::Matchers::WithinAbs(0.02604, 1e-3));
    CHECK_THAT(left.value, Catch::Matchers::WithinAbs(5.4404276561e-4, 1e-10));

    const ContaminationMinimum right =
        find_contamination_minimum(Side::right, 0.180264, Flavor::mu, 0.02, 0.03, P, M);
    CHECK_THAT(right.t, Catch::Matchers::WithinAbs(0.02568, 1e-3));
    CHECK_THAT(right.value, Catch::Matchers::WithinAbs(1.8662008607e-3, 1e-10));
}

TEST_CASE("contamination search edge cases") {
    const ContaminationMinimum point =
        find_contamination_minimum(Side::left, 0.579497, Flavor::e, 0.025, 0.025, P, M);
    CHECK(point.t == 0.025);
    CHECK_THAT(point.value,
               Catch::Matchers::WithinAbs(tau_contamination(Side::left, 0.579497, Flavor::e, 0.025, P, M),
                                          1e-15));
    CHECK_THROWS_AS(find_contamination_minimum(Side::left, 0.5, Flavor::e, 0.03, 0.02, P, M),
                    EmptyRange);
}
