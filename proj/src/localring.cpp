#include "u3/localring.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "u3/errors.hpp"
#include "u3/finitered.hpp"
#include "u3/quadfield.hpp"

namespace u3 {

namespace {

using i128 = __int128;

int floordiv(int a, int b) {
    int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}
int ceildiv(int a, int b) { return -floordiv(-a, b); }

int vp(i128 x, long p) {
    if (x == 0) return kValInf;
    int v = 0;
    while (x % p == 0) {
        x /= p;
        ++v;
    }
    return v;
}

i128 modp(i128 x, i128 m) {
    i128 r = x % m;
    return r < 0 ? r + m : r;
}

long inv_mod128(i128 a, long m) { return inv_mod(static_cast<long>(modp(a, m)), m); }

}  // namespace

std::shared_ptr<const LocalRing> LocalRing::make(long p, RingKind kind, int N) {
    if (!is_prime(p)) throw InvalidInput("LocalRing: p must be prime");
    if (kind == RingKind::ramified && p == 2) throw InvalidInput("LocalRing: ramified extensions of Q_2 are excluded");
    if (N < 1) throw InvalidInput("LocalRing: precision must be positive");
    std::shared_ptr<LocalRing> R(new LocalRing());
    R->p_ = p;
    R->kind_ = kind;
    R->N_ = N;
    R->max_digits_ = 0;
    {
        i128 x = 1;
        R->pow_.push_back(1);
        while (x * p < (static_cast<i128>(1) << 62)) {
            x *= p;
            R->pow_.push_back(static_cast<long>(x));
            ++R->max_digits_;
        }
    }
    if (kind == RingKind::unramified) {
        if (p == 2) {
            R->tr_ = -1;
            R->nm_ = 1;  // theta^2 + theta + 1 = 0
            R->defc_ = -3;
        } else {
            long e = 2;
            while (legendre(e, p) != -1) ++e;
            R->tr_ = 0;
            R->nm_ = -e;  // theta^2 = e
            R->defc_ = e;
        }
    } else {
        R->tr_ = 0;
        R->nm_ = p;  // xi^2 = -u p with u = 1
        R->defc_ = 1;
    }
    const long q = R->q();
    // Fixed primitive element: first residue (in index order) of order q - 1.
    std::vector<long> primes;
    for (long l = 2, m = q - 1; m > 1; ++l) {
        if (m % l == 0) {
            primes.push_back(l);
            while (m % l == 0) m /= l;
        }
    }
    auto rpow = [&](Residue x, long e) {
        Residue r{1, 0};
        while (e > 0) {
            if (e & 1) r = R->res_mul(r, x);
            x = R->res_mul(x, x);
            e >>= 1;
        }
        return r;
    };
    for (long idx = 1; idx < q; ++idx) {
        const Residue x{idx % p, idx / p};
        bool prim = true;
        for (long l : primes)
            if (rpow(x, (q - 1) / l) == Residue{1, 0}) prim = false;
        if (prim) {
            R->gen_ = x;
            break;
        }
    }
    R->log_.assign(static_cast<std::size_t>(q), -1);
    Residue cur{1, 0};
    for (long j = 0; j < q - 1; ++j) {
        R->log_[static_cast<std::size_t>(R->res_index(cur))] = j;
        cur = R->res_mul(cur, R->gen_);
    }
    return R;
}

std::string LocalRing::description() const {
    std::ostringstream os;
    if (ramified()) {
        os << "ramified E/Q_" << p_ << ", xi^2 = -" << defc_ << "*" << p_ << ", uniformizer xi";
    } else if (p_ == 2) {
        os << "unramified E/Q_2, w^2 + w + 1 = 0, xi = 1 + 2w";
    } else {
        os << "unramified E/Q_" << p_ << ", w^2 = " << defc_ << ", xi = w";
    }
    os << ", precision cap " << N_;
    return os.str();
}

long LocalRing::pow_p(int e) const {
    if (e < 0 || e >= static_cast<int>(pow_.size()))
        throw PrecisionLoss("LocalRing: digit capacity exceeded (p^" + std::to_string(e) + ")");
    return pow_[static_cast<std::size_t>(e)];
}

Residue LocalRing::res_mul(const Residue& x, const Residue& y) const {
    if (ramified()) return {mod_p(x.a * y.a, p_), 0};
    const long a = x.a * y.a - nm_ * x.b * y.b;
    const long b = x.a * y.b + x.b * y.a + tr_ * x.b * y.b;
    return {mod_p(a, p_), mod_p(b, p_)};
}

Residue LocalRing::res_conj(const Residue& x) const {
    if (ramified()) return x;
    return {mod_p(x.a + tr_ * x.b, p_), mod_p(-x.b, p_)};
}

long LocalRing::dlog(const Residue& x) const {
    const long l = log_.at(static_cast<std::size_t>(res_index(x)));
    if (l < 0) throw NotAUnit("dlog of zero residue");
    return l;
}

Residue LocalRing::res_inv(const Residue& x) const {
    const long l = dlog(x);
    Residue r{1, 0};
    const long e = mod_p(-l, q() - 1);
    for (long i = 0; i < e; ++i) r = res_mul(r, gen_);
    return r;
}

std::vector<Residue> LocalRing::residue_units() const {
    std::vector<Residue> out;
    for (long idx = 1; idx < q(); ++idx) out.push_back({idx % p_, idx / p_});
    return out;
}

std::vector<Residue> LocalRing::residue_norm_one() const {
    std::vector<Residue> out;
    for (const auto& r : residue_units())
        if (res_mul(r, res_conj(r)) == Residue{1, 0}) out.push_back(r);
    return out;
}

LocalElement LocalRing::zero() const { return LocalElement(this, 0, 0, 0, N_); }
LocalElement LocalRing::one() const { return LocalElement(this, 1, 0, 0, N_); }
LocalElement LocalRing::integer(long v) const { return LocalElement(this, v, 0, 0, N_); }
LocalElement LocalRing::theta() const { return LocalElement(this, 0, 1, 0, N_); }

LocalElement LocalRing::uniformizer() const { return ramified() ? theta() : integer(p_); }

LocalElement LocalRing::xi() const {
    if (ramified()) return theta();
    if (p_ == 2) return LocalElement(this, 1, 2, 0, N_);
    return theta();
}

LocalElement LocalRing::half_xi() const {
    if (!ramified() && p_ == 2) return theta();
    return xi() * integer(2).inverse();
}

LocalElement LocalRing::varpi_pow(int n) const {
    if (n == 0) return one();
    if (n < 0) return varpi_pow(-n).inverse();
    LocalElement r = one();
    const LocalElement w = uniformizer();
    for (int i = 0; i < n; ++i) r = r * w;
    return r;
}

LocalElement LocalRing::nonsquare_unit() const { return lift(gen_); }

LocalElement LocalRing::from_digits(long a, long b, int shift, int depth) const {
    const LocalElement r(this, a, b, 0, depth);
    if (shift == 0) return r;
    const LocalElement w = varpi_pow(shift);
    LocalElement out = w * r;
    return out.with_prec(shift + depth);
}

LocalElement LocalRing::from_qp(long s, int j, int depth) const {
    // p^j s with s known mod p^depth; in varpi units that is e*(j + depth).
    LocalElement r(this, s, 0, 0, e() * depth);
    if (j == 0) return r;
    LocalElement pj = j > 0 ? integer(pow_p(j)) : LocalElement(this, 1, 0, -j, N_);
    return (pj * r).with_prec(e() * (j + depth));
}

LocalElement LocalRing::lift(const Residue& r) const { return LocalElement(this, r.a, ramified() ? 0 : r.b, 0, N_); }

LocalElement::LocalElement(const LocalRing* R, long A, long B, int k, int prec) : R_(R), A_(A), B_(B), k_(k), prec_(prec) {
    normalize_();
}

void LocalElement::normalize_() {
    if (prec_ > R_->N()) prec_ = R_->N();
    const long p = R_->p();
    while (k_ > 0 && A_ % p == 0 && B_ % p == 0) {
        A_ /= p;
        B_ /= p;
        --k_;
    }
    int da, db;
    if (R_->ramified()) {
        da = k_ + ceildiv(prec_, 2);
        db = k_ + ceildiv(prec_ - 1, 2);
    } else {
        da = db = k_ + prec_;
    }
    if (da <= 0) A_ = 0;
    else A_ = static_cast<long>(modp(A_, R_->pow_p(da)));
    if (db <= 0) B_ = 0;
    else B_ = static_cast<long>(modp(B_, R_->pow_p(db)));
    while (k_ > 0 && A_ % p == 0 && B_ % p == 0) {
        A_ /= p;
        B_ /= p;
        --k_;
    }
}

bool LocalElement::visible() const { return A_ != 0 || B_ != 0; }

int LocalElement::valuation() const {
    if (!visible()) {
        if (prec_ >= R_->N()) return kValInf;
        throw PrecisionLoss("valuation: all digits below precision " + std::to_string(prec_) + " vanish");
    }
    const long p = R_->p();
    const int va = vp(A_, p), vb = vp(B_, p);
    if (R_->ramified()) {
        const int a = va == kValInf ? kValInf : 2 * va;
        const int b = vb == kValInf ? kValInf : 2 * vb + 1;
        return std::min(a, b) - 2 * k_;
    }
    return std::min(va, vb) - k_;
}

int LocalElement::valuation_lb() const { return visible() ? valuation() : prec_; }

bool LocalElement::divisible_by(int j) const {
    if (visible()) return valuation() >= j;
    if (j <= prec_) return true;
    throw PrecisionLoss("divisible_by: need precision " + std::to_string(j) + ", have " + std::to_string(prec_));
}

bool LocalElement::is_unit() const {
    if (!visible() && prec_ < 1) throw PrecisionLoss("is_unit: no digit known");
    return visible() && valuation() == 0;
}

Residue LocalElement::residue() const {
    if (!divisible_by(0)) throw NotAUnit("residue of a non-integral element");
    if (prec_ < 1) throw PrecisionLoss("residue: precision below 1");
    if (k_ != 0) return {0, 0};  // integral with k > 0 only when the unit digit is zero
    const long p = R_->p();
    if (R_->ramified()) return {mod_p(A_, p), 0};
    return {mod_p(A_, p), mod_p(B_, p)};
}

LocalElement LocalElement::operator-() const { return LocalElement(R_, -A_, -B_, k_, prec_); }

LocalElement LocalElement::operator+(const LocalElement& o) const {
    const int k = std::max(k_, o.k_);
    const int prec = std::min(prec_, o.prec_);
    const long p = R_->p();
    i128 s1 = 1, s2 = 1;
    for (int i = k_; i < k; ++i) s1 *= p;
    for (int i = o.k_; i < k; ++i) s2 *= p;
    // Reduce before building so that values fit.
    const i128 A = static_cast<i128>(A_) * s1 + static_cast<i128>(o.A_) * s2;
    const i128 B = static_cast<i128>(B_) * s1 + static_cast<i128>(o.B_) * s2;
    int da = R_->ramified() ? k + ceildiv(prec, 2) : k + prec;
    int db = R_->ramified() ? k + ceildiv(prec - 1, 2) : k + prec;
    da = std::max(da, 0);
    db = std::max(db, 0);
    const i128 ma = R_->pow_p(std::min(da, R_->max_digits()));
    const i128 mb = R_->pow_p(std::min(db, R_->max_digits()));
    return LocalElement(R_, static_cast<long>(modp(A, ma)), static_cast<long>(modp(B, mb)), k, prec);
}

LocalElement LocalElement::operator-(const LocalElement& o) const { return *this + (-o); }

LocalElement LocalElement::operator*(const LocalElement& o) const {
    const int prec = std::min(prec_ + o.valuation_lb(), o.prec_ + valuation_lb());
    const i128 a1 = A_, b1 = B_, a2 = o.A_, b2 = o.B_;
    i128 A = a1 * a2 - static_cast<i128>(R_->nm()) * (b1 * b2);
    i128 B = a1 * b2 + a2 * b1 + static_cast<i128>(R_->tr()) * (b1 * b2);
    int k = k_ + o.k_;
    const long p = R_->p();
    while (k > 0 && A % p == 0 && B % p == 0) {
        A /= p;
        B /= p;
        --k;
    }
    const int pc = std::min(prec, R_->N());
    int da = R_->ramified() ? k + ceildiv(pc, 2) : k + pc;
    int db = R_->ramified() ? k + ceildiv(pc - 1, 2) : k + pc;
    da = std::max(da, 0);
    db = std::max(db, 0);
    if (da > R_->max_digits() || db > R_->max_digits())
        throw PrecisionLoss("LocalElement: digit capacity exceeded; lower the precision cap");
    return LocalElement(R_, static_cast<long>(modp(A, R_->pow_p(da))), static_cast<long>(modp(B, R_->pow_p(db))), k, pc);
}

LocalElement LocalElement::conj() const {
    return LocalElement(R_, A_ + R_->tr() * B_, -B_, k_, prec_);
}

LocalElement LocalElement::norm() const { return *this * conj(); }

LocalElement LocalElement::inverse() const {
    const int v = valuation();
    if (v == kValInf) throw std::domain_error("LocalElement: inverse of zero");
    const long p = R_->p();
    const i128 a = A_, b = B_;
    const i128 n0 = a * a + static_cast<i128>(R_->tr()) * a * b + static_cast<i128>(R_->nm()) * b * b;
    const int w = vp(n0, p);
    i128 n1 = n0;
    for (int i = 0; i < w; ++i) n1 /= p;
    // N(x) = p^{w - 2k} n1 has valuation 2v and relative precision prec - v.
    const int e = R_->e();
    const int qv = w - 2 * k_;  // p-adic valuation of N(x)
    const int rel = prec_ - v;
    const int precN = -2 * v + rel;  // absolute precision of N(x)^{-1}
    int kN = qv > 0 ? qv : 0;
    int digits = kN + ceildiv(precN, e) + 1;
    digits = std::max(digits, 1);
    if (digits > R_->max_digits()) throw PrecisionLoss("inverse: digit capacity exceeded");
    const long M = R_->pow_p(digits);
    i128 inv = inv_mod128(n1, M);
    if (qv < 0) {
        for (int i = 0; i < -qv; ++i) inv *= p;
        inv = modp(inv, M);
    }
    const LocalElement ninv(R_, static_cast<long>(inv), 0, kN, precN);
    LocalElement out = conj() * ninv;
    return out.with_prec(prec_ - 2 * v);
}

LocalElement LocalElement::with_prec(int prec) const {
    return LocalElement(R_, A_, B_, k_, std::min(prec, prec_));
}

bool LocalElement::congruent(const LocalElement& o) const {
    const LocalElement d = *this - o;
    return !d.visible();
}

std::string LocalElement::to_string() const {
    std::ostringstream os;
    os << "(" << A_ << (B_ >= 0 ? "+" : "") << B_ << "t)";
    if (k_ > 0) os << "/" << R_->p() << "^" << k_;
    os << " +O(w^" << prec_ << ")";
    return os.str();
}

long ResidueCharacter::group_order(const LocalRing& R) const {
    switch (target) {
        case CharTarget::Fp_star: return R.p() - 1;
        case CharTarget::Fp2_star:
            if (R.ramified()) throw InvalidInput("F_{p^2} characters need an unramified ring");
            return R.p() * R.p() - 1;
        case CharTarget::Fp2_one:
            if (R.ramified()) throw InvalidInput("F_{p^2}^1 characters need an unramified ring");
            return R.p() + 1;
    }
    return 1;
}

long ResidueCharacter::order(const LocalRing& R) const {
    const long n = group_order(R);
    long g = std::gcd(mod_p(exponent, n), n);
    return n / (g == 0 ? n : g);
}

long character_log(const ResidueCharacter& chi, const LocalRing& R, const Residue& r) {
    const long n = chi.group_order(R);
    const long l = R.dlog(r);
    const long qm1 = R.q() - 1;
    long j = 0;
    switch (chi.target) {
        case CharTarget::Fp_star: {
            const long step = qm1 / (R.p() - 1);
            if (l % step != 0) throw InvalidInput("character on F_p^x evaluated outside F_p");
            j = l / step;
            break;
        }
        case CharTarget::Fp2_star: j = l; break;
        case CharTarget::Fp2_one: {
            if (!(R.res_mul(r, R.res_conj(r)) == Residue{1, 0})) throw NotNormOne("residue is not of norm one");
            j = l / (R.p() - 1);
            break;
        }
    }
    return mod_p(j * mod_p(chi.exponent, n), n);
}

ExactNumber eval_character_residue(const ResidueCharacter& chi, const LocalRing& R, const Residue& r) {
    return ExactNumber::root_of_unity(chi.group_order(R), character_log(chi, R, r));
}

ExactNumber eval_character(const ResidueCharacter& chi, const LocalElement& x) {
    if (!x.is_unit()) throw NotAUnit("eval_character: argument is not a unit");
    if (chi.target == CharTarget::Fp2_one) {
        const LocalElement d = x.norm() - x.ring()->one();
        if (d.visible()) throw NotNormOne("eval_character: x * conj(x) != 1");
    }
    return eval_character_residue(chi, *x.ring(), x.residue());
}

}  // namespace u3
