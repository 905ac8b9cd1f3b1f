#include "u3/finitered.hpp"

#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "u3/errors.hpp"
#include "u3/quadfield.hpp"

namespace u3 {

long mod_p(long a, long p) {
    long r = a % p;
    return r < 0 ? r + p : r;
}

long pow_mod(long b, long e, long m) {
    long r = 1 % m;
    b = mod_p(b, m);
    while (e > 0) {
        if (e & 1) r = static_cast<long>((static_cast<__int128>(r) * b) % m);
        b = static_cast<long>((static_cast<__int128>(b) * b) % m);
        e >>= 1;
    }
    return r;
}

long inv_mod(long a, long m) {
    long g = m, x = 0, y = 1, aa = mod_p(a, m);
    long r = aa;
    while (r != 0) {
        const long q = g / r;
        long t = g - q * r;
        g = r;
        r = t;
        t = x - q * y;
        x = y;
        y = t;
    }
    if (g != 1) throw NotAUnit("inv_mod: " + std::to_string(a) + " is not invertible mod " + std::to_string(m));
    return mod_p(x, m);
}

int legendre(long a, long p) {
    a = mod_p(a, p);
    if (a == 0) return 0;
    return pow_mod(a, (p - 1) / 2, p) == 1 ? 1 : -1;
}

PGL2Element PGL2Element::make(long p, Mat2p m) {
    for (auto& x : m) x = mod_p(x, p);
    if (mod_p(m[0] * m[3] - m[1] * m[2], p) == 0) throw std::invalid_argument("PGL2Element: singular matrix");
    for (long x : m) {
        if (x != 0) {
            const long s = inv_mod(x, p);
            for (auto& y : m) y = mod_p(y * s, p);
            break;
        }
    }
    return {p, m};
}

Mat3p o3_form(long p) { return {0, 0, 1, 0, mod_p(2, p), 0, 1, 0, 0}; }

Mat3p mul3(const Mat3p& a, const Mat3p& b, long p) {
    Mat3p c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            long s = 0;
            for (int k = 0; k < 3; ++k) s += a[3 * i + k] * b[3 * k + j];
            c[3 * i + j] = mod_p(s, p);
        }
    return c;
}

long det3(const Mat3p& a, long p) {
    const long d = a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
                   a[2] * (a[3] * a[7] - a[4] * a[6]);
    return mod_p(d, p);
}

PGL2Element mul2(const PGL2Element& a, const PGL2Element& b) {
    const auto& x = a.m;
    const auto& y = b.m;
    return PGL2Element::make(a.p, {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2],
                                   x[2] * y[1] + x[3] * y[3]});
}

bool preserves_form(const O3Element& g) {
    const long p = g.p;
    Mat3p t{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t[3 * i + j] = g.m[3 * j + i];
    return mul3(mul3(t, o3_form(p), p), g.m, p) == o3_form(p);
}

O3Element adjoint(const PGL2Element& g) {
    const long p = g.p;
    const long a = g.m[0], b = g.m[1], c = g.m[2], d = g.m[3];
    const long s = inv_mod(a * d - b * c, p);
    Mat3p m = {a * a, 2 * a * b, -b * b, a * c, a * d + b * c, -b * d, -c * c, -2 * c * d, d * d};
    for (auto& x : m) x = mod_p(x * s, p);
    return {p, m};
}

std::vector<PGL2Element> all_pgl2(long p) {
    std::vector<PGL2Element> out;
    std::set<Mat2p> seen;
    for (long a = 0; a < p; ++a)
        for (long b = 0; b < p; ++b)
            for (long c = 0; c < p; ++c)
                for (long d = 0; d < p; ++d) {
                    if (mod_p(a * d - b * c, p) == 0) continue;
                    const auto g = PGL2Element::make(p, {a, b, c, d});
                    if (seen.insert(g.m).second) out.push_back(g);
                }
    return out;
}

std::vector<O3Element> all_o3(long p) {
    // Columns v_j must satisfy v_i^T Q v_j = Q_ij; enumerate column by column.
    const Mat3p Q = o3_form(p);
    auto bil = [&](const std::array<long, 3>& x, const std::array<long, 3>& y) {
        long s = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) s += x[i] * Q[3 * i + j] * y[j];
        return mod_p(s, p);
    };
    std::vector<std::array<long, 3>> vecs;
    for (long a = 0; a < p; ++a)
        for (long b = 0; b < p; ++b)
            for (long c = 0; c < p; ++c) vecs.push_back({a, b, c});
    std::vector<O3Element> out;
    for (const auto& v1 : vecs) {
        if (bil(v1, v1) != Q[0]) continue;
        for (const auto& v2 : vecs) {
            if (bil(v2, v2) != Q[4] || bil(v1, v2) != Q[1]) continue;
            for (const auto& v3 : vecs) {
                if (bil(v3, v3) != Q[8] || bil(v1, v3) != Q[2] || bil(v2, v3) != Q[5]) continue;
                Mat3p m = {v1[0], v2[0], v3[0], v1[1], v2[1], v3[1], v1[2], v2[2], v3[2]};
                if (det3(m, p) == 0) continue;
                out.push_back({p, m});
            }
        }
    }
    return out;
}

namespace {

// Preimage of h0 in SO3 under adjoint, normalized so that a = 1 (or b = 1 when a = 0).
std::optional<PGL2Element> pull_back(const Mat3p& h0, long p) {
    const long two_inv = inv_mod(2, p);
    Mat2p m;
    if (h0[0] != 0) {
        const long det = inv_mod(h0[0], p);
        const long b = mod_p(h0[1] * det % p * two_inv, p);
        const long c = mod_p(h0[3] * det, p);
        m = {1, b, c, mod_p(det + b * c, p)};
    } else {
        if (h0[2] == 0) return std::nullopt;
        const long det = mod_p(-inv_mod(h0[2], p), p);
        m = {0, 1, mod_p(-det, p), mod_p(-h0[5] * det, p)};
    }
    if (mod_p(m[0] * m[3] - m[1] * m[2], p) == 0) return std::nullopt;
    const auto g = PGL2Element::make(p, m);
    if (adjoint(g).m != h0) return std::nullopt;
    return g;
}

}  // namespace

int sign_character(const O3Element& h) {
    const long p = h.p;
    if (p < 3 || !is_prime(p)) throw InvalidInput("sign_character: p must be an odd prime");
    Mat3p h0 = h.m;
    for (auto& x : h0) x = mod_p(x, p);
    const long d = det3(h0, p);
    if (d == p - 1) {
        for (auto& x : h0) x = mod_p(-x, p);
    } else if (d != 1) {
        throw std::invalid_argument("sign_character: determinant is not +-1");
    }
    const auto g = pull_back(h0, p);
    if (!g) throw std::invalid_argument("sign_character: element does not preserve the form");
    return legendre(g->m[0] * g->m[3] - g->m[1] * g->m[2], p);
}

int reflexion_sign(long p) {
    const O3Element s{p, {1, 0, 0, 0, mod_p(-1, p), 0, 0, 0, 1}};
    return sign_character(s);
}

long gross_subgroup_order(long p) {
    if (p > 13) throw BudgetExceeded("gross_subgroup_order: p > 13 is beyond the enumeration budget");
    if (p < 3 || !is_prime(p)) throw InvalidInput("gross_subgroup_order: p must be an odd prime");
    std::vector<Mat3p> gens;
    Mat3p minus1 = {p - 1, 0, 0, 0, p - 1, 0, 0, 0, p - 1};
    gens.push_back(minus1);
    for (const auto& g : all_pgl2(p)) {
        if (legendre(g.m[0] * g.m[3] - g.m[1] * g.m[2], p) == 1) gens.push_back(adjoint(g).m);
    }
    std::set<Mat3p> seen;
    std::vector<Mat3p> frontier;
    const Mat3p id = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    seen.insert(id);
    frontier.push_back(id);
    while (!frontier.empty()) {
        const Mat3p x = frontier.back();
        frontier.pop_back();
        for (const auto& g : gens) {
            const Mat3p y = mul3(x, g, p);
            if (seen.insert(y).second) frontier.push_back(y);
        }
    }
    return static_cast<long>(seen.size());
}

}  // namespace u3
