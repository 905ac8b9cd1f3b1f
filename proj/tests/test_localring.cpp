#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "u3/errors.hpp"
#include "u3/localring.hpp"

using namespace u3;

namespace {

LocalElement random_element(const LocalRing& R, std::mt19937_64& rng, int shift = 0) {
    const long M = R.pow_p(R.N());
    return R.from_digits(static_cast<long>(rng() % M), static_cast<long>(rng() % M), shift, R.N());
}

LocalElement random_unit(const LocalRing& R, std::mt19937_64& rng) {
    for (;;) {
        LocalElement x = random_element(R, rng);
        if (x.is_unit()) return x;
    }
}

}  // namespace

TEST_CASE("ring axioms and conjugation") {
    for (auto kind : {RingKind::unramified, RingKind::ramified}) {
        for (long p : {3L, 5L, 7L}) {
            auto R = LocalRing::make(p, kind, 4);
            std::mt19937_64 rng(static_cast<unsigned long>(p * 10 + (kind == RingKind::ramified)));
            for (int t = 0; t < 100; ++t) {
                const auto x = random_element(*R, rng), y = random_element(*R, rng), z = random_element(*R, rng);
                CHECK(((x + y) * z).congruent(x * z + y * z));
                CHECK((x * y).congruent(y * x));
                CHECK(x.conj().conj().congruent(x));
                CHECK((x * y).conj().congruent(x.conj() * y.conj()));
                const auto tr = x + x.conj();
                const auto nm = x.norm();
                CHECK(tr.conj().congruent(tr));
                CHECK(nm.conj().congruent(nm));
            }
            CHECK(R->xi().conj().congruent(-R->xi()));
            CHECK((R->half_xi() - R->half_xi().conj()).congruent(R->xi()));
            CHECK(R->integer(5).conj().congruent(R->integer(5)));
        }
    }
    auto R2 = LocalRing::make(2, RingKind::unramified, 5);
    CHECK(R2->xi().conj().congruent(-R2->xi()));
    CHECK(R2->xi().is_unit());
    CHECK((R2->half_xi() - R2->half_xi().conj()).congruent(R2->xi()));
    CHECK_THROWS_AS(LocalRing::make(2, RingKind::ramified, 3), InvalidInput);
}

TEST_CASE("valuation and precision") {
    for (auto kind : {RingKind::unramified, RingKind::ramified}) {
        auto R = LocalRing::make(3, kind, 4);
        CHECK(R->uniformizer().valuation() == 1);
        CHECK(R->one().valuation() == 0);
        CHECK(R->zero().valuation() == kValInf);
        CHECK(R->varpi_pow(-2).valuation() == -2);
        CHECK((R->varpi_pow(3) * R->varpi_pow(-3)).congruent(R->one()));
        // varpi^N * y carries no visible digit below N.
        const auto y = R->from_digits(1, 1, 0, 2);
        const auto x = R->from_digits(1, 1, R->N(), 0);
        CHECK(!x.visible());
        CHECK_THROWS_AS(y.with_prec(0).valuation(), PrecisionLoss);
        CHECK_THROWS_AS(R->from_digits(0, 0, 0, 2).valuation(), PrecisionLoss);
        CHECK(R->from_digits(0, 0, 0, 2).divisible_by(2));
        CHECK_THROWS_AS(R->from_digits(0, 0, 0, 2).divisible_by(3), PrecisionLoss);
    }
}

TEST_CASE("inverse") {
    for (auto kind : {RingKind::unramified, RingKind::ramified}) {
        for (long p : {3L, 5L}) {
            auto R = LocalRing::make(p, kind, 5);
            std::mt19937_64 rng(static_cast<unsigned long>(p));
            for (int t = 0; t < 200; ++t) {
                auto x = random_unit(*R, rng);
                const int s = static_cast<int>(rng() % 5) - 2;
                x = x * R->varpi_pow(s);
                const auto xi = x.inverse();
                CHECK(xi.valuation() == -s);
                const auto one = x * xi;
                CHECK(one.prec() >= R->N() - 2 * std::abs(s) - 1);
                CHECK(one.congruent(R->one()));
            }
        }
    }
}

TEST_CASE("Hensel fibre sizes of unit groups") {
    // Units of O / varpi^n, counted by digits, have size (q-1) q^{n-1}.
    for (auto kind : {RingKind::unramified, RingKind::ramified}) {
        auto R = LocalRing::make(3, kind, 3);
        for (int n = 1; n <= 3; ++n) {
            std::set<std::pair<long, long>> units, lower;
            const long Ma = R->pow_p(R->ramified() ? (n + 1) / 2 : n);
            const long Mb = R->pow_p(R->ramified() ? n / 2 : n);
            std::map<std::pair<long, long>, int> fibre;
            for (long a = 0; a < Ma; ++a)
                for (long b = 0; b < Mb; ++b) {
                    const LocalElement x(R.get(), a, b, 0, n);
                    if (!x.is_unit()) continue;
                    units.insert({x.A(), x.B()});
                    const auto y = x.with_prec(n - 1);
                    fibre[{y.A(), y.B()}]++;
                }
            CHECK(static_cast<long>(units.size()) == (R->q() - 1) * R->pow_p(0) * [&] {
                long s = 1;
                for (int i = 1; i < n; ++i) s *= R->ramified() ? 3 : 9;
                return s;
            }());
            if (n >= 2)
                for (const auto& [k, c] : fibre) CHECK(c == (R->ramified() ? 3 : 9));
        }
    }
}

TEST_CASE("residue characters") {
    auto R = LocalRing::make(3, RingKind::unramified, 3);
    std::mt19937_64 rng(11);
    const ResidueCharacter chi4{CharTarget::Fp2_one, 1};
    CHECK(chi4.order(*R) == 4);
    const ResidueCharacter chi8{CharTarget::Fp2_star, 3};
    for (int t = 0; t < 200; ++t) {
        const auto x = random_unit(*R, rng), y = random_unit(*R, rng);
        CHECK(eval_character(chi8, x * y) == eval_character(chi8, x) * eval_character(chi8, y));
        const auto u = x * x.conj().inverse();
        const auto v = y * y.conj().inverse();
        CHECK(eval_character(chi4, u * v) == eval_character(chi4, u) * eval_character(chi4, v));
    }
    // Generator of F_9^1 is g^{p-1}; chi4 sends it to zeta_4.
    Residue g1{1, 0};
    for (int i = 0; i < 2; ++i) g1 = R->res_mul(g1, R->primitive_element());
    CHECK(eval_character_residue(chi4, *R, g1) == ExactNumber::root_of_unity(4, 1));
    CHECK_THROWS_AS(eval_character(chi4, R->lift(R->primitive_element())), NotNormOne);
    CHECK_THROWS_AS(eval_character(chi8, R->uniformizer()), NotAUnit);
    // Quadratic character on F_p^x sends a non-square to -1.
    auto Rr = LocalRing::make(5, RingKind::ramified, 3);
    const ResidueCharacter quad{CharTarget::Fp_star, 2};
    CHECK(eval_character(quad, Rr->nonsquare_unit()) == ExactNumber(-1));
    CHECK(eval_character(quad, Rr->integer(4)) == ExactNumber(1));
    CHECK(eval_character(ResidueCharacter{CharTarget::Fp_star, 0}, Rr->integer(2)) == ExactNumber(1));
}
