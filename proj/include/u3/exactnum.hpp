#pragma once
// Exact arithmetic in cyclotomic fields Q(zeta_m) and truncated power series over them.

#include <gmpxx.h>

#include <string>
#include <vector>

namespace u3 {

using Rational = mpq_class;

/// Element of Q(zeta_m), stored in the power basis 1, z, ..., z^{phi(m)-1}
/// after reduction by the m-th cyclotomic polynomial.
class ExactNumber {
public:
    ExactNumber();
    ExactNumber(long v);  // NOLINT(google-explicit-constructor)
    ExactNumber(const Rational& q);  // NOLINT(google-explicit-constructor)

    static ExactNumber root_of_unity(long m, long k);
    /// Positive real square root of a positive integer, built from Gauss sums.
    static ExactNumber sqrt_of(long n);

    long order() const { return m_; }
    const std::vector<Rational>& coeffs() const { return c_; }

    bool is_zero() const;
    bool is_rational() const;
    Rational rational_value() const;  // throws unless is_rational()

    ExactNumber operator-() const;
    ExactNumber& operator+=(const ExactNumber& o);
    ExactNumber& operator-=(const ExactNumber& o);
    ExactNumber& operator*=(const ExactNumber& o);
    ExactNumber& operator/=(const ExactNumber& o);
    friend ExactNumber operator+(ExactNumber a, const ExactNumber& b) { return a += b; }
    friend ExactNumber operator-(ExactNumber a, const ExactNumber& b) { return a -= b; }
    friend ExactNumber operator*(ExactNumber a, const ExactNumber& b) { return a *= b; }
    friend ExactNumber operator/(ExactNumber a, const ExactNumber& b) { return a /= b; }
    friend bool operator==(const ExactNumber& a, const ExactNumber& b);
    friend bool operator!=(const ExactNumber& a, const ExactNumber& b) { return !(a == b); }

    ExactNumber inverse() const;
    ExactNumber pow(long e) const;
    /// Galois action zeta_m -> zeta_m^a, gcd(a, m) = 1.
    ExactNumber galois(long a) const;
    /// Complex conjugation (a = -1).
    ExactNumber conj() const { return galois(-1); }
    /// Rewrite in the smallest Q(zeta_d) containing the element.
    ExactNumber minimal_order() const;
    /// Same value seen in Q(zeta_M), M a multiple of order().
    ExactNumber embed(long M) const;

    /// Sign (-1, 0, 1) of the image under every complex embedding, for a
    /// totally real element. Evaluated with MPFR and a certified error bound.
    std::vector<int> real_embedding_signs() const;
    /// True iff this element is real and >= 0 under every embedding.
    bool totally_nonnegative() const;

    std::string to_string() const;

private:
    ExactNumber(long m, std::vector<Rational> c);
    void reduce_();
    long m_ = 1;
    std::vector<Rational> c_;
};

long euler_phi(long m);
/// Coefficients (low degree first) of the m-th cyclotomic polynomial.
const std::vector<long>& cyclotomic_poly(long m);

/// Power series sum_{k < M_max} c_k t^k with arithmetic truncated at M_max.
class FormalSeries {
public:
    explicit FormalSeries(int M_max);
    FormalSeries(int M_max, std::vector<ExactNumber> coeffs);

    int M_max() const { return static_cast<int>(c_.size()); }
    const ExactNumber& operator[](int k) const { return c_.at(k); }
    ExactNumber& operator[](int k) { return c_.at(k); }
    const std::vector<ExactNumber>& coeffs() const { return c_; }

    FormalSeries& operator+=(const FormalSeries& o);
    FormalSeries operator+(const FormalSeries& o) const;
    FormalSeries operator*(const FormalSeries& o) const;
    FormalSeries scaled(const ExactNumber& s) const;
    bool operator==(const FormalSeries& o) const;

private:
    std::vector<ExactNumber> c_;
};

/// scale * (1 - a t)^{-1} truncated at t^{M_max}.
FormalSeries series_of_geometric(const ExactNumber& a, const ExactNumber& scale, int M_max);

}  // namespace u3
