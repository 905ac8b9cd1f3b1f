#pragma once
// Truncated rings of integers of quadratic extensions E/Q_p.
//
// Elements are stored as p^{-k} (A + B theta) with integer digits, together with an
// absolute precision `prec`: the value is known modulo varpi^prec.

#include <climits>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "u3/exactnum.hpp"

namespace u3 {

enum class RingKind { unramified, ramified };

class LocalElement;

/// Residue-field element, a + b*theta mod p (b = 0 in the ramified case).
struct Residue {
    long a = 0;
    long b = 0;
    bool operator==(const Residue& o) const { return a == o.a && b == o.b; }
    bool operator<(const Residue& o) const { return a < o.a || (a == o.a && b < o.b); }
};

class LocalRing {
public:
    /// N is the precision cap in uniformizer digits.
    static std::shared_ptr<const LocalRing> make(long p, RingKind kind, int N);

    long p() const { return p_; }
    RingKind kind() const { return kind_; }
    bool ramified() const { return kind_ == RingKind::ramified; }
    int N() const { return N_; }
    /// Ramification index (1 or 2): varpi^e = p * unit.
    int e() const { return ramified() ? 2 : 1; }
    /// theta^2 = tr*theta - nm.
    long tr() const { return tr_; }
    long nm() const { return nm_; }
    /// Unramified: e with theta^2 = e (p odd). Ramified: u with xi^2 = -u p.
    long defining_constant() const { return defc_; }
    std::string description() const;

    LocalElement zero() const;
    LocalElement one() const;
    LocalElement integer(long v) const;
    LocalElement theta() const;
    LocalElement uniformizer() const;
    /// Different generator xi with conj(xi) = -xi.
    LocalElement xi() const;
    /// An element h with h - conj(h) = xi.
    LocalElement half_xi() const;
    /// varpi^n for any integer n.
    LocalElement varpi_pow(int n) const;
    /// A fixed non-square unit of O (its residue generates the residue field units).
    LocalElement nonsquare_unit() const;
    /// Element varpi^shift * r, with r given by base-p digit integers (a, b) and known modulo varpi^(shift + depth).
    LocalElement from_digits(long a, long b, int shift, int depth) const;
    /// Element of Q_p: p^j * s known modulo p^(j + depth).
    LocalElement from_qp(long s, int j, int depth) const;
    /// Teichmuller-free lift of a residue class, at full precision.
    LocalElement lift(const Residue& r) const;

    // Residue field F_q, q = p^2 (unramified) or p (ramified).
    long q() const { return ramified() ? p_ : p_ * p_; }
    Residue res_mul(const Residue& x, const Residue& y) const;
    Residue res_conj(const Residue& x) const;
    Residue res_inv(const Residue& x) const;
    long res_index(const Residue& x) const { return x.a + p_ * x.b; }
    /// Discrete log base the fixed primitive element of F_q^x.
    long dlog(const Residue& x) const;
    const Residue& primitive_element() const { return gen_; }
    std::vector<Residue> residue_units() const;
    /// Residues of norm one (F_{p^2}^1, or {+-1} when ramified).
    std::vector<Residue> residue_norm_one() const;

    /// Largest digit count representable in 62-bit integers.
    int max_digits() const { return max_digits_; }
    long pow_p(int e) const;

private:
    LocalRing() = default;
    long p_ = 0;
    RingKind kind_ = RingKind::unramified;
    int N_ = 0;
    long tr_ = 0, nm_ = 0, defc_ = 0;
    int max_digits_ = 0;
    std::vector<long> pow_;
    std::vector<long> log_;
    Residue gen_;
};

constexpr int kValInf = INT_MAX / 4;

class LocalElement {
public:
    LocalElement() = default;
    LocalElement(const LocalRing* R, long A, long B, int k, int prec);

    const LocalRing* ring() const { return R_; }
    int prec() const { return prec_; }
    long A() const { return A_; }
    long B() const { return B_; }
    int k() const { return k_; }

    /// True when some digit below prec is nonzero.
    bool visible() const;
    /// Exact valuation; throws PrecisionLoss when not determined (kValInf for an exact zero).
    int valuation() const;
    /// Valuation if visible, else the precision (a lower bound).
    int valuation_lb() const;
    /// x == 0 modulo varpi^j, decided from known digits; throws PrecisionLoss if j > prec and undecided.
    bool divisible_by(int j) const;
    bool is_unit() const;
    Residue residue() const;  // requires valuation >= 0

    LocalElement operator-() const;
    LocalElement operator+(const LocalElement& o) const;
    LocalElement operator-(const LocalElement& o) const;
    LocalElement operator*(const LocalElement& o) const;
    LocalElement conj() const;
    LocalElement inverse() const;
    LocalElement norm() const;  // x * conj(x)
    LocalElement with_prec(int prec) const;
    /// Congruent modulo the common known precision.
    bool congruent(const LocalElement& o) const;

    std::string to_string() const;

private:
    void normalize_();
    const LocalRing* R_ = nullptr;
    long A_ = 0, B_ = 0;
    int k_ = 0;
    int prec_ = 0;
};

enum class CharTarget { Fp_star, Fp2_star, Fp2_one };

/// Character of a residue group sending the fixed generator to zeta_n^exponent.
struct ResidueCharacter {
    CharTarget target = CharTarget::Fp2_star;
    long exponent = 0;
    long group_order(const LocalRing& R) const;
    /// Multiplicative order of the character.
    long order(const LocalRing& R) const;
};

/// Value of chi on a residue (must be a unit, and of norm one for Fp2_one).
ExactNumber eval_character_residue(const ResidueCharacter& chi, const LocalRing& R, const Residue& r);
ExactNumber eval_character(const ResidueCharacter& chi, const LocalElement& x);

/// Exponent k of zeta_n for chi(r), n = group order; -1 for non-units.
long character_log(const ResidueCharacter& chi, const LocalRing& R, const Residue& r);

}  // namespace u3
