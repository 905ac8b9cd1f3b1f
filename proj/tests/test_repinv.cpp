#include "doctest.h"
#include "u3/errors.hpp"
#include "u3/repinv.hpp"

using namespace u3;

namespace {

const Subgroup kCirc{SubgroupKind::K_circ, 0};
const Subgroup kPrime{SubgroupKind::K_prime, 0};
const Subgroup kT{SubgroupKind::K_T, 0};
const Subgroup kGross{SubgroupKind::K_gross, 0};
const Subgroup iGross{SubgroupKind::I_gross, 0};

ExactNumber pw(long p, long e) { return ExactNumber(p).pow(e); }

}  // namespace

TEST_CASE("f_K on the torus") {
    for (long p : {3L, 5L, 7L}) {
        const auto R = LocalRing::make(p, RingKind::unramified, 10);
        const auto mu = CharacterSpec::unramified_lambda0();
        CHECK(eval_f_K(UMat::identity(R.get()), kCirc, mu) == ExactNumber(1));
        CHECK(eval_f_K(gamma_pow(R.get(), 1), kCirc, mu) == -pw(p, 3));
        CHECK(eval_f_K(gamma_pow(R.get(), -1), kCirc, mu) == -pw(p, -3));
        CHECK(eval_f_K(gamma_pow(R.get(), 2), kPrime, mu) == pw(p, 6));
        CHECK(mu_gamma(mu, *R, -1) == -pw(p, -1));
        CHECK(mu_gamma(mu.w(), *R, 1) == -pw(p, -1));
        // f_K is right K-invariant
        CHECK(eval_f_K(gamma_pow(R.get(), 1) * weyl_circ(R.get()), kCirc, mu) == -pw(p, 3));
        CHECK(eval_f_K(gamma_pow(R.get(), 1) * weyl_prime(R.get()), kPrime, mu) == -pw(p, 3));
    }
}

TEST_CASE("f_K needs an unramified character") {
    const auto R = LocalRing::make(3, RingKind::unramified, 8);
    CHECK_THROWS_AS(eval_f_K(UMat::identity(R.get()), kCirc, CharacterSpec::inert_tame(*R, 1)), NoInvariantVector);
    const auto Rr = LocalRing::make(3, RingKind::ramified, 8);
    for (int sign : {1, -1}) {
        const auto mu = CharacterSpec::ramified_symplectic(*Rr, sign);
        CHECK(eval_f_K(UMat::identity(Rr.get()), kGross, mu) == ExactNumber(1));
        CHECK(eval_f_K(eta(Rr.get()), kGross, mu) == ExactNumber(gross_sign(eta(Rr.get()))));
        CHECK_THROWS_AS(eval_f_K(UMat::identity(Rr.get()), kCirc, mu), NoInvariantVector);
    }
}

TEST_CASE("double cosets") {
    for (long p : {3L, 5L}) {
        const auto R = LocalRing::make(p, RingKind::unramified, 8);
        const auto dc = double_cosets(*R, kT, 2);
        REQUIRE(dc.reps.size() == static_cast<std::size_t>(p + 3));
        // every named representative opens its own orbit
        long named = 0;
        for (const auto& l : dc.labels) named += (l.rfind("orbit_", 0) == 0) ? 0 : 1;
        CHECK(named == p + 3);
        long total = 0;
        for (long s : dc.orbit_sizes) total += s;
        CHECK(total == dc.n_lines);
        // (p^3 + 1) residue lines, each with p^3 lifts
        CHECK(dc.n_lines == (p * p * p + 1) * p * p * p);
        CHECK(double_cosets(*R, kCirc, 2).reps.size() == 1);
        CHECK(double_cosets(*R, kPrime, 2).reps.size() == 1);
        CHECK(double_cosets(*R, {SubgroupKind::Iwahori, 0}, 2).reps.size() == 2);
    }
    const auto Rr = LocalRing::make(3, RingKind::ramified, 8);
    CHECK(double_cosets(*Rr, iGross, 2).reps.size() == 2);
    CHECK(double_cosets(*Rr, kGross, 2).reps.size() == 1);
    CHECK_THROWS_AS(double_cosets(*Rr, kT, 2), InvalidInput);
    CHECK_THROWS_AS(double_cosets(*Rr, {SubgroupKind::I_r, 2}, 2), InvalidInput);
}

TEST_CASE("invariant dimensions") {
    const auto R = LocalRing::make(3, RingKind::unramified, 8);
    // chi on the norm-one residues (cyclic of order 4): k = 2 quadratic, k = 1 of order 4
    CHECK(CharacterSpec::inert_tame(*R, 2).lambda_residue.order(*R) == 2);
    CHECK(CharacterSpec::inert_tame(*R, 1).lambda_residue.order(*R) == 4);
    for (int N : {2, 3}) {
        CHECK(invariant_dimension(*R, kT, CharacterSpec::inert_tame(*R, 2), N).total_dim == 4);
        CHECK(invariant_dimension(*R, kT, CharacterSpec::inert_tame(*R, 1), N).total_dim == 3);
    }
    const auto l0 = CharacterSpec::unramified_lambda0();
    CHECK(invariant_dimension(*R, kCirc, l0, 2).total_dim == 1);
    CHECK(invariant_dimension(*R, kPrime, l0, 2).total_dim == 1);
    CHECK(invariant_dimension(*R, {SubgroupKind::Iwahori, 0}, l0, 2).total_dim == 2);
    CHECK_THROWS_AS(invariant_dimension(*R, {SubgroupKind::I_r, 2}, l0, 2), InvalidInput);

    const auto Rr = LocalRing::make(3, RingKind::ramified, 8);
    const auto mu = CharacterSpec::ramified_symplectic(*Rr, 1);
    CHECK(invariant_dimension(*Rr, kGross, mu, 2).total_dim == 1);
    CHECK(invariant_dimension(*Rr, iGross, mu, 2).total_dim == 2);
    CHECK(invariant_dimension(*Rr, kCirc, mu, 2).total_dim == 0);
}

TEST_CASE("matrix coefficient sequences") {
    const auto R = LocalRing::make(3, RingKind::unramified, 14);
    const auto l0 = CharacterSpec::unramified_lambda0();
    PhiOptions po;
    po.enumeration.depths = {1, 1, 0, 0};
    // K': average p^{-6n}, so p^n Phi_n = 1
    for (int n = 1; n <= 2; ++n) {
        const auto r = phi_sequence(*R, kPrime, l0, n, PhiMode::pushforward, po);
        CHECK(r.average == pw(3, -6L * n));
        CHECK(pw(3, n) * r.phi == ExactNumber(1));
    }
    // K_circ: the zonal spherical value at gamma is -1/p (one vertex up, p - 1 level, p^4 down);
    // so the average is (-p^{-3})(-p^{-1}) = p^{-4} and Phi_n = p^n.
    for (int n = 1; n <= 2; ++n) {
        const auto r = phi_sequence(*R, kCirc, l0, n, PhiMode::pushforward, po);
        CHECK(r.average == pw(3, -4L * n));
        CHECK(r.phi == pw(3, n));
    }
    // depth independence of the pushforward
    PhiOptions deeper = po;
    deeper.enumeration.depths = {2, 2, 0, 0};
    CHECK(phi_sequence(*R, kPrime, l0, 1, PhiMode::pushforward, deeper).average == pw(3, -6));
    // Monte Carlo within 4 standard errors
    PhiOptions mc = po;
    mc.samples = 1500;
    const auto m = phi_sequence(*R, kPrime, l0, 1, PhiMode::montecarlo, mc);
    REQUIRE(m.variance_of_mean);
    const Rational diff = m.average.rational_value() - Rational(1, 729);
    CHECK(diff * diff <= 16 * *m.variance_of_mean);
    CHECK_THROWS_AS(phi_sequence(*R, {SubgroupKind::Iwahori, 0}, l0, 1, PhiMode::pushforward, po), InvalidInput);
}

TEST_CASE("volumes and the constant c0") {
    const auto R = LocalRing::make(3, RingKind::unramified, 12);
    const Rational c0 = measure_c0(*R);
    CHECK(c0 == Rational(4, 3));
    EnumOptions eo;
    eo.depths = {2, 2, 0, 0};
    CHECK(volume_strata(*R, kPrime, 0, eo) == 1);
    for (int j = 1; j <= 3; ++j) {
        long e = j + 2 * (j / 2);
        Rational expect = c0;
        for (long i = 0; i < e; ++i) expect *= 3;
        CHECK(volume_strata(*R, kPrime, j, eo) == expect);
    }
    const auto Rr = LocalRing::make(3, RingKind::ramified, 12);
    EnumOptions er;
    er.depths = {3, 3, 0, 0};
    for (int j = 1; j <= 3; ++j) CHECK(volume_strata(*Rr, iGross, j, er) == Rational(R->pow_p(j - 1)));
}

TEST_CASE("macdonald gamma") {
    const auto R = LocalRing::make(3, RingKind::unramified, 8);
    const auto l0 = CharacterSpec::unramified_lambda0();
    CHECK(macdonald_gamma(*R, l0).is_zero());
    // mu^w(gamma^{-1}) = -p, mu^w(gamma^{-2}) = p^2: (1 - p^4)/(1 - p^2) * (1 + p^3)/(1 + p)
    CHECK(macdonald_gamma(*R, l0.w()) == ExactNumber(Rational(10 * 28, 4)));
    CharacterSpec pole = l0;
    pole.lambda_on_uniformizer = ExactNumber(1);
    pole.use_w = false;
    // nu(gamma^{-1}) = p^{-1}: no pole, first factor (1 - p^2 p^{-2}) vanishes
    CHECK(macdonald_gamma(*R, pole).is_zero());
}

TEST_CASE("gamma translates") {
    const auto R = LocalRing::make(3, RingKind::unramified, 14);
    const auto l0 = CharacterSpec::unramified_lambda0();
    for (int r = 0; r <= 2; ++r) {
        const auto a = gamma_translate_rank(*R, kCirc, l0, r, 2 * r + 1);
        CHECK(a.rank == r + 1);
        for (bool b : a.invariant) CHECK(b);
        const auto b = gamma_translate_rank(*R, kPrime, l0, r, 2 * r + 1);
        CHECK(b.rank == r + 1);
        // gamma^j K' gamma^{-j} contains I_{2r} only for j < r
        for (int j = 0; j < r; ++j) CHECK(b.invariant[static_cast<std::size_t>(j)]);
        if (r >= 1) CHECK_FALSE(b.invariant[static_cast<std::size_t>(r)]);
    }
}

TEST_CASE("ramified strata") {
    const auto Rr = LocalRing::make(3, RingKind::ramified, 14);
    EnumOptions eo;
    eo.depths = {3, 3, 0, 0};
    for (int sign : {1, -1}) {
        const auto st = ramified_strata(*Rr, CharacterSpec::ramified_symplectic(*Rr, sign), 1, eo);
        CHECK(st.index_K_I == 4);
        CHECK(st.inner == ExactNumber(Rational(1, 3)));
        CHECK(st.inner_matches);
        CHECK(st.complement_bounded);
    }
}
