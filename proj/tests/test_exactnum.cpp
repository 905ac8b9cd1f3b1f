#include <random>

#include "doctest.h"
#include "u3/exactnum.hpp"

using u3::ExactNumber;
using u3::FormalSeries;
using u3::Rational;

TEST_CASE("roots of unity multiply by adding exponents") {
    for (long m : {1L, 2L, 3L, 4L, 8L, 12L}) {
        for (long a = 0; a < m; ++a)
            for (long b = 0; b < m; ++b)
                CHECK(ExactNumber::root_of_unity(m, a) * ExactNumber::root_of_unity(m, b) ==
                      ExactNumber::root_of_unity(m, a + b));
    }
}

TEST_CASE("mixed orders embed into the lcm") {
    const ExactNumber i = ExactNumber::root_of_unity(4, 1);
    const ExactNumber w = ExactNumber::root_of_unity(3, 1);
    const ExactNumber z12 = ExactNumber::root_of_unity(12, 1);
    CHECK(i * w == z12.pow(7));
    CHECK((i * i) == ExactNumber(-1));
    CHECK((w * w + w + 1).is_zero());
}

TEST_CASE("square roots square back") {
    for (long n : {2L, 3L, 5L, 6L, 7L, 12L, 27L}) {
        const ExactNumber s = ExactNumber::sqrt_of(n);
        CHECK(s * s == ExactNumber(n));
        const auto signs = s.real_embedding_signs();
        CHECK(!signs.empty());
    }
    // The chosen root is the positive one under the principal embedding: sqrt(3) - 1 > 0 there,
    // and its product with its Galois conjugate -sqrt(3) - 1 is -2.
    const ExactNumber s3 = ExactNumber::sqrt_of(3);
    CHECK((s3 - 1) * (-s3 - 1) == ExactNumber(-2));
}

TEST_CASE("inverse and division") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 30; ++t) {
        ExactNumber x;
        for (long k = 0; k < 12; ++k)
            x += ExactNumber(static_cast<long>(rng() % 7) - 3) * ExactNumber::root_of_unity(12, k);
        if (x.is_zero()) continue;
        CHECK(x * x.inverse() == ExactNumber(1));
        CHECK((x / x) == ExactNumber(1));
    }
}

TEST_CASE("minimal order and rational detection") {
    const ExactNumber i = ExactNumber::root_of_unity(8, 2);
    CHECK(i.minimal_order().order() == 4);
    CHECK((i * i).is_rational());
    CHECK((i * i).rational_value() == Rational(-1));
    CHECK(!i.is_rational());
}

TEST_CASE("totally nonnegative detects sign under every embedding") {
    const ExactNumber s2 = ExactNumber::sqrt_of(2);
    CHECK((s2 * s2).totally_nonnegative());
    CHECK(!(s2 - 1).totally_nonnegative());  // -sqrt2 - 1 < 0 under the other embedding
    CHECK((ExactNumber(3) - s2).totally_nonnegative());
    const ExactNumber z = ExactNumber::root_of_unity(5, 1);
    CHECK((z * z.conj()).totally_nonnegative());
    CHECK(!z.totally_nonnegative());
}

TEST_CASE("formal geometric series") {
    const FormalSeries g = series_of_geometric(ExactNumber(2), ExactNumber(3), 5);
    CHECK(g[0] == ExactNumber(3));
    CHECK(g[4] == ExactNumber(48));
    FormalSeries one_minus(5);
    one_minus[0] = 1;
    one_minus[1] = -2;
    const FormalSeries prod = g * one_minus;
    CHECK(prod[0] == ExactNumber(3));
    for (int k = 1; k < 5; ++k) CHECK(prod[k].is_zero());
}
