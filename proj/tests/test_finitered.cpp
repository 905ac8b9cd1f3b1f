#include "doctest.h"
#include "u3/finitered.hpp"
#include "u3/quadfield.hpp"

#include <set>

using namespace u3;

namespace {

Mat3p diag3(long a, long b, long c) { return {a, 0, 0, 0, b, 0, 0, 0, c}; }

long first_nonsquare(long p) {
    for (long u = 2; u < p; ++u)
        if (legendre(u, p) == -1) return u;
    return 0;
}

}  // namespace

TEST_CASE("adjoint on generators") {
    for (long p : {3L, 5L, 7L}) {
        const auto id = PGL2Element::make(p, {1, 0, 0, 1});
        CHECK(adjoint(id).m == diag3(1, 1, 1));
        const auto w = PGL2Element::make(p, {0, 1, p - 1, 0});
        CHECK(adjoint(w).m == Mat3p{0, 0, p - 1, 0, p - 1, 0, p - 1, 0, 0});
        for (long a = 1; a < p; ++a) {
            const auto t = PGL2Element::make(p, {a, 0, 0, 1});
            CHECK(adjoint(t).m == diag3(a, 1, inv_mod(a, p)));
        }
    }
}

TEST_CASE("adjoint is an isomorphism onto SO3") {
    for (long p : {3L, 5L, 7L}) {
        const auto G = all_pgl2(p);
        CHECK(static_cast<long>(G.size()) == p * (p * p - 1));
        std::set<O3Element> image;
        for (const auto& g : G) {
            const auto a = adjoint(g);
            CHECK(preserves_form(a));
            CHECK(det3(a.m, p) == 1);
            image.insert(a);
        }
        CHECK(image.size() == G.size());
        for (std::size_t i = 0; i < G.size(); i += 7)
            for (std::size_t j = 0; j < G.size(); j += 11)
                CHECK(adjoint(mul2(G[i], G[j])).m == mul3(adjoint(G[i]).m, adjoint(G[j]).m, p));
        if (p <= 5) {
            const auto O = all_o3(p);
            CHECK(static_cast<long>(O.size()) == 2 * p * (p * p - 1));
            long so = 0;
            for (const auto& h : O)
                if (det3(h.m, p) == 1) {
                    ++so;
                    CHECK(image.count(h) == 1);
                }
            CHECK(so == static_cast<long>(image.size()));
        }
    }
}

TEST_CASE("sign character") {
    for (long p : {3L, 5L, 7L}) {
        const O3Element id{p, diag3(1, 1, 1)};
        CHECK(sign_character(id) == 1);
        CHECK(sign_character(O3Element{p, diag3(p - 1, p - 1, p - 1)}) == 1);
        const long u = first_nonsquare(p);
        CHECK(sign_character(adjoint(PGL2Element::make(p, {u, 0, 0, 1}))) == -1);
        // homomorphism with kernel of index two
        const auto G = all_pgl2(p);
        long plus = 0;
        for (const auto& g : G) {
            const int s = sign_character(adjoint(g));
            if (s == 1) ++plus;
            const long d = mod_p(g.m[0] * g.m[3] - g.m[1] * g.m[2], p);
            CHECK(s == legendre(d, p));
        }
        CHECK(2 * plus == static_cast<long>(G.size()));
        for (std::size_t i = 0; i < G.size(); i += 13)
            for (std::size_t j = 0; j < G.size(); j += 17)
                CHECK(sign_character(adjoint(mul2(G[i], G[j]))) ==
                      sign_character(adjoint(G[i])) * sign_character(adjoint(G[j])));
    }
}

TEST_CASE("reflexions and the Gross subgroup") {
    CHECK(reflexion_sign(3) == -1);
    CHECK(reflexion_sign(7) == -1);
    CHECK(reflexion_sign(5) == 1);
    for (long p : {3L, 5L, 7L, 11L, 13L}) CHECK(reflexion_sign(p) == kronecker(-1, p));
    CHECK(gross_subgroup_order(3) == 24);
    CHECK(gross_subgroup_order(5) == 120);
    CHECK(gross_subgroup_order(7) == 336);
    for (long D = 7; D <= 500; D += 4) {
        if (!is_valid_discriminant(D)) continue;
        int prod = 1;
        for (long p = 3; p <= D; p += 2)
            if (D % p == 0 && is_prime(p)) prod *= reflexion_sign(p);
        CHECK(prod == -1);
    }
}
