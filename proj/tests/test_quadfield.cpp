#include "doctest.h"
#include "u3/errors.hpp"
#include "u3/quadfield.hpp"

#include <map>

using namespace u3;

namespace {

// Euler's criterion, one odd prime at a time.
int legendre_euler(long a, long p) {
    long r = 1, b = ((a % p) + p) % p, e = (p - 1) / 2;
    while (e > 0) {
        if (e & 1) r = r * b % p;
        b = b * b % p;
        e >>= 1;
    }
    return r == 1 ? 1 : (r == 0 ? 0 : -1);
}

int jacobi_by_factoring(long a, long n) {
    int out = 1;
    for (long p = 3; n > 1; p += 2)
        while (n % p == 0) {
            out *= legendre_euler(a, p);
            n /= p;
        }
    return out;
}

}  // namespace

TEST_CASE("discriminant validation") {
    CHECK(validate_discriminant(7).D == 7);
    CHECK_THROWS_AS(validate_discriminant(9), NotFundamental);
    CHECK_THROWS_AS(validate_discriminant(5), NotFundamental);
    CHECK_THROWS_AS(validate_discriminant(3), NotFundamental);
    CHECK_FALSE(is_valid_discriminant(75));
    CHECK(is_valid_discriminant(83));
}

TEST_CASE("kronecker symbol") {
    CHECK(kronecker(-2, 7) == -1);
    CHECK(kronecker(-2, 11) == 1);
    for (long n = 1; n < 50; ++n) CHECK(kronecker(1, n) == 1);
    for (long n = 3; n < 400; n += 2)
        for (long a : {-7L, -5L, -2L, -1L, 2L, 3L, 10L}) CHECK(kronecker(a, n) == jacobi_by_factoring(a, n));
}

TEST_CASE("splitting") {
    const auto d11 = validate_discriminant(11), d7 = validate_discriminant(7);
    CHECK(splitting(d11, 7) == SplittingType::inert);
    CHECK(splitting(d7, 7) == SplittingType::ramified);
    CHECK(splitting(d11, 5) == SplittingType::split);
    // -11 = 5 mod 8: 2 is inert; -7 = 1 mod 8: 2 splits
    CHECK(splitting(d11, 2) == SplittingType::inert);
    CHECK(splitting(d7, 2) == SplittingType::split);
    for (long D : {7L, 23L, 71L}) {
        const auto d = validate_discriminant(D);
        long nsplit = 0, ninert = 0;
        for (long p = 3; p < 10000; p += 2) {
            if (!is_prime(p) || D % p == 0) continue;
            const bool square = legendre_euler(-D, p) == 1;
            CHECK(splitting(d, p) == (square ? SplittingType::split : SplittingType::inert));
            (square ? nsplit : ninert) += 1;
        }
        CHECK(std::abs(nsplit - ninert) < 0.2 * std::max(nsplit, ninert));
    }
}

TEST_CASE("class numbers, two ways") {
    const std::map<long, long> known{{7, 1}, {11, 1}, {23, 3}, {31, 3}, {47, 5}, {71, 7}, {83, 3}};
    for (const auto& [D, h] : known) {
        const auto d = validate_discriminant(D);
        CHECK(class_number_forms(d) == h);
        CHECK(class_number_dirichlet(d) == h);
    }
    for (long D = 7; D <= 2000; D += 4)
        if (is_valid_discriminant(D)) {
            const auto d = validate_discriminant(D);
            CHECK(class_number_forms(d) == class_number_dirichlet(d));
        }
}

TEST_CASE("cube root numbers") {
    CHECK(canonical_cube_root_number(validate_discriminant(11)) == 1);
    CHECK(canonical_cube_root_number(validate_discriminant(7)) == -1);
    CHECK(canonical_cube_root_number(validate_discriminant(23)) == -1);
    for (long D = 7; D < 2000; D += 4)
        if (is_valid_discriminant(D)) CHECK((canonical_cube_root_number(validate_discriminant(D)) == 1) == (D % 8 == 3));
    CHECK(twisted_root_number(-1, 1, 1) == 1);
    CHECK(twisted_root_number(1, 0, 1) == 1);
    CHECK(twisted_root_number(1, 1, -1) == 1);
    CHECK(twisted_root_number(1, 2, -1) == -1);
}

TEST_CASE("sign switching tame characters") {
    CHECK(count_sign_switching_tame_characters(7) == 3);
    CHECK(count_sign_switching_tame_characters(5) == 0);
    CHECK(count_sign_switching_tame_characters(3) == 1);
    CHECK(count_sign_switching_tame_characters(13) == 6);
    for (long l = 3; l < 500; l += 2)
        if (is_prime(l)) CHECK(count_sign_switching_tame_characters(l) == sign_switching_closed_form(l));
    CHECK_THROWS_AS(count_sign_switching_tame_characters(2), InvalidInput);
}
