#include "doctest.h"
#include "u3/errors.hpp"
#include "u3/intertwine.hpp"

using namespace u3;

namespace {

ExactNumber q(long a, long b) { return ExactNumber(Rational(a, b)); }

// e(n) = max(0, -v(b), -v(z)) with z = s + N(b) h; counted directly from the valuation boxes.
Rational shell_oracle(long p, int m) {
    auto box = [&](int k) -> Rational {
        // v(b) >= -floor(k/2) forces v(N(b)) >= -k; s then ranges over p^{-k} Z_p
        if (k < 0) return 0;
        Rational r = 1;
        for (int i = 0; i < 2 * (k / 2); ++i) r *= p;
        for (int i = 0; i < k; ++i) r *= p;
        return r;
    };
    return box(m) - box(m - 1);
}

}  // namespace

TEST_CASE("exponent shells match the valuation count") {
    const auto R = LocalRing::make(3, RingKind::unramified, 16);
    for (int m = 0; m <= 4; ++m) CHECK(exponent_shell_measure(*R, m) == shell_oracle(3, m));
    CHECK(exponent_shell_measure(*R, 2) == 78);
}

TEST_CASE("shell measures sum to the truncated region") {
    const auto R = LocalRing::make(3, RingKind::unramified, 16);
    const auto chi = CharacterSpec::inert_tame(*R, 1);
    const auto co = intertwining_coefficients(*R, chi, 0, 0, 2);
    Rational total = 0;
    for (const auto& m : co.shell_measures) total += m;
    // T = 4: b in varpi^{-2} O (volume 3^4), discarded cells have v(z) < -4 or v(b) < -2
    CHECK(total == shell_oracle(3, 0) + shell_oracle(3, 1) + shell_oracle(3, 2) + shell_oracle(3, 3) + shell_oracle(3, 4));
}

TEST_CASE("gamma filtration grows by p^4") {
    const auto R = LocalRing::make(3, RingKind::unramified, 16);
    CHECK(gamma_shell_measure(*R, 0) == 1);
    for (int m = 1; m <= 4; ++m) CHECK(gamma_shell_measure(*R, m + 1) == 81 * gamma_shell_measure(*R, m));
}

TEST_CASE("closed form expansion") {
    const ExactNumber C = q(-2, 9), a(-3);
    const FormalSeries pos = expand_closed_form(C, a, 1, 4);
    CHECK(pos[0] == C);
    CHECK(pos[3] == C * a.pow(3));
    const FormalSeries two = expand_closed_form(C, a, 2, 5);
    CHECK(two[1].is_zero());
    CHECK(two[4] == C * a * a);
    const FormalSeries neg = expand_closed_form(C, a, -1, 4);
    CHECK(neg[0].is_zero());
    CHECK(neg[1] == q(-2, 27));
    CHECK(neg[2] == q(2, 81));
    CHECK_THROWS_AS(expand_closed_form(C, a, 0, 4), InvalidInput);
    CHECK(match_kappa({pos}, C, a, 4) == 1);
    CHECK(match_kappa({neg}, C, a, 4) == -1);
    CHECK_FALSE(match_kappa({pos, neg}, C, a, 4).has_value());
}

TEST_CASE("intertwining series at p = 3") {
    const auto R = LocalRing::make(3, RingKind::unramified, 16);
    const auto chi = CharacterSpec::inert_tame(*R, 1);
    REQUIRE(chi.lambda_residue.order(*R) == 4);
    const auto d = intertwining_coefficients(*R, chi, 0, 0, 4);
    CHECK(d.series[0] == q(1, 9));
    for (int m = 1; m <= 6; ++m) CHECK(d.series[m] == q(-2, 9) * ExactNumber(3).pow(-m));
    // the section f_0 only sees sigma_0 at every shell
    const auto off = intertwining_coefficients(*R, chi, 0, 1, 4);
    for (int m = 0; m <= 6; ++m) CHECK(off.series[m].is_zero());
    // the diagonal pairs share every coefficient past the constant term
    const auto d1 = intertwining_coefficients(*R, chi, 1, 1, 4);
    CHECK(d1.series[0] == q(-1, 9));
    for (int m = 1; m <= 6; ++m) CHECK(d1.series[m] == d.series[m]);
}

TEST_CASE("right K_T translates leave the series unchanged") {
    const auto R = LocalRing::make(3, RingKind::unramified, 16);
    const auto chi = CharacterSpec::inert_tame(*R, 1);
    const auto u = R->lift({1, 1});
    const auto v = R->lift({2, 1});
    const std::vector<UMat> ks = {torus(u, v * v.conj().inverse()),
                                  upper_unipotent(R->from_digits(1, 1, 1, 8), R->from_qp(1, 1, 8)),
                                  lower_unipotent(R->from_digits(2, 1, 1, 8), R->from_qp(2, 1, 8))};
    for (long y : {0L, 2L}) {
        const auto base = intertwining_coefficients(*R, chi, y, y, 2);
        for (const auto& k : ks) {
            const auto moved = intertwining_coefficients(*R, chi, y, y, 2, {}, k);
            for (int m = 0; m <= 4; ++m) CHECK(moved.series[m] == base.series[m]);
        }
    }
}

TEST_CASE("thread count does not change the result") {
    const auto R = LocalRing::make(3, RingKind::unramified, 16);
    const auto chi = CharacterSpec::inert_tame(*R, 2);
    ShellOptions one, four;
    four.threads = 4;
    const auto a = intertwining_coefficients(*R, chi, 1, 1, 3, one);
    const auto b = intertwining_coefficients(*R, chi, 1, 1, 3, four);
    for (int m = 0; m <= 5; ++m) CHECK(a.series[m] == b.series[m]);
    CHECK(a.cells == b.cells);
}

TEST_CASE("closed form report") {
    const auto R = LocalRing::make(3, RingKind::unramified, 16);
    const auto chi = CharacterSpec::inert_tame(*R, 1);
    const auto rep = compare_with_closed_form(*R, chi, 0, 0, 4);
    CHECK(rep.hypotheses_ok);
    CHECK(rep.constant == q(-2, 9));
    CHECK(rep.mu_gamma == ExactNumber(-3));
    CHECK(rep.ratio_off_unit_circle);
    CHECK(rep.kappas_tried.size() == 4);
    CHECK(rep.coefficient_match.size() == 4);
    CHECK(shell_integral(*R, chi, 0, 0, 2) == rep.computed[2]);

    const auto trivial = compare_with_closed_form(*R, CharacterSpec::inert_tame(*R, 0), 0, 0, 4);
    CHECK_FALSE(trivial.hypotheses_ok);
    const auto Rr = LocalRing::make(3, RingKind::ramified, 8);
    CHECK_FALSE(compare_with_closed_form(*Rr, CharacterSpec::ramified_symplectic(*Rr, 1), 0, 0, 4).hypotheses_ok);
    CHECK_THROWS_AS(intertwining_coefficients(*R, chi, 0, 0, 0), InvalidInput);
}
