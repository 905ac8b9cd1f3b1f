#include "doctest.h"
#include "u3/errors.hpp"
#include "u3/globalq.hpp"

using namespace u3;

TEST_CASE("irregularity at D = 3 mod 8") {
    const auto a = irregularity_lower_bound(11, 7, 0);
    CHECK(a.h == 1);
    CHECK(a.q_lower_bound == 1);
    CHECK(a.exact);
    CHECK(a.W_cube == 1);
    CHECK(irregularity_lower_bound(11, 7, 1).exact);
    const auto b = irregularity_lower_bound(11, 7, 4);
    CHECK(b.q_lower_bound == 3);
    CHECK_FALSE(b.exact);
    CHECK(b.unevaluated_term == "+ (unknown >= 0)");
    // 2 is inert when D = 3 mod 8
    const auto two = irregularity_lower_bound(11, 2, 2);
    CHECK(two.q_lower_bound == 2);
    CHECK(two.notes.size() == 5);
    for (long D : {11L, 19L, 43L, 59L, 83L}) {
        long prev = 0;
        for (int r = 0; r <= 8; ++r) {
            const auto rep = irregularity_lower_bound(D, 2, r);
            CHECK(rep.q_lower_bound >= prev);
            CHECK(rep.q_lower_bound % rep.h == 0);
            if (r <= 1) CHECK(rep.q_lower_bound == rep.h);
            prev = rep.q_lower_bound;
        }
    }
}

TEST_CASE("irregularity at D = 7 mod 8") {
    const auto a = irregularity_lower_bound(23, 7, 3);
    CHECK(a.h == 3);
    CHECK(a.n_switching_characters == 3);
    CHECK(a.q_lower_bound == 9);
    CHECK(a.twisted_W == 1);
    CHECK_FALSE(a.exact);
    CHECK(irregularity_lower_bound(23, 7, 2).q_lower_bound == 0);
    CHECK(irregularity_lower_bound(23, 5, 3).q_lower_bound == 0);
    // l = 3 at level 27: q >= h
    CHECK(irregularity_lower_bound(7, 3, 3).q_lower_bound == 1);
    for (long D = 7; D < 400; D += 8) {
        if (!is_valid_discriminant(D)) continue;
        const FundamentalDiscriminant d{D};
        for (long l = 7; l < 60; ++l) {
            if (!is_prime(l) || splitting(d, l) != SplittingType::inert) continue;
            const auto rep = irregularity_lower_bound(D, l, 3);
            const long k = (l + 1) % 3 == 0 ? (l - 5) / 2 : (l - 1) / 2;
            CHECK(rep.q_lower_bound == rep.h * k);
            CHECK(rep.q_lower_bound >= 3 * rep.h);
            CHECK(twisted_root_number(-1, 1, 1) == rep.twisted_W);
        }
    }
}

TEST_CASE("irregularity input errors") {
    CHECK_THROWS_AS(irregularity_lower_bound(9, 7, 0), NotFundamental);
    CHECK_THROWS_AS(irregularity_lower_bound(11, 5, 0), NotInert);
    CHECK_THROWS_AS(irregularity_lower_bound(7, 7, 0), NotInert);
    CHECK_THROWS_AS(irregularity_lower_bound(11, 7, -1), InvalidInput);
}

TEST_CASE("Bombieri-Lang status") {
    const auto a = bombieri_lang_status(23, 7);
    CHECK(a.kind == BLKind::holds_at_level);
    CHECK(a.level_exponent == 3);
    CHECK(a.to_string() == "holds_at_level(7^3)");
    CHECK(bombieri_lang_status(23, 5).kind == BLKind::not_covered);
    const auto b = bombieri_lang_status(11, 7);
    CHECK(b.kind == BLKind::holds_at_level);
    CHECK(b.level_exponent == 4);
    CHECK(bombieri_lang_status(83, 5).kind == BLKind::holds_unconditionally);
    const auto c = bombieri_lang_status(7, 3);
    CHECK(c.to_string() == "holds_at_level(3^7)");
    // 5 is inert exactly for D = 7, 23 mod 40 among D = 7 mod 8
    for (long D = 7; D < 2000; D += 8) {
        if (!is_valid_discriminant(D)) continue;
        const bool inert5 = splitting(FundamentalDiscriminant{D}, 5) == SplittingType::inert;
        CHECK(inert5 == (D % 40 == 7 || D % 40 == 23));
        CHECK(bombieri_lang_status(D, 5).kind == BLKind::not_covered);
    }
    for (long D = 7; D < 600; D += 4) {
        if (!is_valid_discriminant(D)) continue;
        const FundamentalDiscriminant d{D};
        for (long l : {2L, 3L, 5L, 7L, 11L, 13L, 17L})
            if (splitting(d, l) != SplittingType::inert) CHECK(bombieri_lang_status(D, l).kind == BLKind::not_covered);
    }
}

TEST_CASE("tables") {
    const auto t = emit_table(7, 31, {7, 3}, 3);
    for (const auto& row : t) {
        CHECK(is_valid_discriminant(row.D));
        CHECK(splitting(FundamentalDiscriminant{row.D}, row.l) == SplittingType::inert);
    }
    for (std::size_t i = 1; i < t.size(); ++i)
        CHECK((t[i - 1].D < t[i].D || (t[i - 1].D == t[i].D && t[i - 1].l < t[i].l)));
    CHECK(t.size() == 6);
    CHECK(emit_table(40, 20, {7}, 3).empty());
    CHECK(emit_table(7, 31, {}, 3).empty());
    const auto again = emit_table(7, 31, {3, 7}, 3);
    REQUIRE(again.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(again[i].q_lower_bound == t[i].q_lower_bound);
}
