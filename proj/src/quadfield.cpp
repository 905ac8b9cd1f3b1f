#include "u3/quadfield.hpp"

#include <cstdlib>
#include <numeric>
#include <string>

#include "u3/errors.hpp"

namespace u3 {

const char* to_string(SplittingType s) {
    switch (s) {
        case SplittingType::split: return "split";
        case SplittingType::inert: return "inert";
        case SplittingType::ramified: return "ramified";
    }
    return "?";
}

bool is_prime(long n) {
    if (n < 2) return false;
    for (long q = 2; q * q <= n; ++q)
        if (n % q == 0) return false;
    return true;
}

bool is_valid_discriminant(long D) {
    if (D <= 3 || D % 2 == 0 || D % 4 != 3) return false;
    for (long q = 3; q * q <= D; q += 2)
        if (D % (q * q) == 0) return false;
    return true;
}

FundamentalDiscriminant validate_discriminant(long D) {
    if (!is_valid_discriminant(D))
        throw NotFundamental("D=" + std::to_string(D) + " is not an odd fundamental discriminant (need D>3, odd, squarefree, D=3 mod 4)");
    return {D};
}

int kronecker(long a, long n) {
    if (a == 0 && n == 0) throw std::invalid_argument("kronecker(0, 0) is undefined");
    if (n == 0) return (a == 1 || a == -1) ? 1 : 0;
    int sign = 1;
    if (n < 0) {
        n = -n;
        if (a < 0) sign = -1;
    }
    int v = 0;
    while (n % 2 == 0) {
        n /= 2;
        ++v;
    }
    if (v > 0) {
        if (a % 2 == 0) return 0;
        const long r = ((a % 8) + 8) % 8;
        if ((v % 2 == 1) && (r == 3 || r == 5)) sign = -sign;
    }
    // Jacobi symbol (a/n), n odd positive.
    long b = n;
    long x = a % b;
    if (x < 0) x += b;
    int t = 1;
    while (x != 0) {
        while (x % 2 == 0) {
            x /= 2;
            const long r = b % 8;
            if (r == 3 || r == 5) t = -t;
        }
        std::swap(x, b);
        if (x % 4 == 3 && b % 4 == 3) t = -t;
        x %= b;
    }
    return b == 1 ? sign * t : 0;
}

SplittingType splitting(FundamentalDiscriminant D, long p) {
    if (!is_prime(p)) throw InvalidInput("splitting: " + std::to_string(p) + " is not prime");
    if (D.D % p == 0) return SplittingType::ramified;
    if (p == 2) {
        const long r = (((-D.D) % 8) + 8) % 8;
        return r == 5 ? SplittingType::inert : SplittingType::split;
    }
    return kronecker(-D.D, p) == -1 ? SplittingType::inert : SplittingType::split;
}

long class_number_forms(FundamentalDiscriminant D) {
    const long disc = -D.D;
    long h = 0;
    for (long a = 1; 3 * a * a <= D.D; ++a) {
        for (long b = -a + 1; b <= a; ++b) {
            const long num = b * b - disc;
            if (num % (4 * a) != 0) continue;
            const long c = num / (4 * a);
            if (c < a) continue;
            if (c == a && b < 0) continue;
            if (std::gcd(std::gcd(a, std::labs(b)), c) != 1) continue;
            ++h;
        }
    }
    return h;
}

long class_number_dirichlet(FundamentalDiscriminant D) {
    long s = 0;
    for (long a = 1; a < D.D; ++a) s += kronecker(-D.D, a) * a;
    return std::labs(s) / D.D;
}

int canonical_cube_root_number(FundamentalDiscriminant D) { return kronecker(-2, D.D); }

int twisted_root_number(int W, int a, int chi_at_minus1) {
    return ((a % 2 == 0) ? 1 : -1) * chi_at_minus1 * W;
}

long count_sign_switching_tame_characters(long l) {
    if (l == 2) throw InvalidInput("tame character count is defined for odd l only");
    if (l < 3 || !is_prime(l)) throw InvalidInput("l must be an odd prime");
    // chi_k(g) = zeta_n^k on the cyclic group <g> of order n = l + 1; -1 = g^{n/2}.
    const long n = l + 1;
    long count = 0;
    for (long k = 0; k < n; ++k) {
        const bool even_at_minus1 = (k * (n / 2)) % n == 0;
        const bool cube_nontrivial = (3 * k) % n != 0;
        if (even_at_minus1 && cube_nontrivial) ++count;
    }
    return count;
}

long sign_switching_closed_form(long l) { return ((l + 1) % 3 != 0) ? (l - 1) / 2 : (l - 5) / 2; }

}  // namespace u3
