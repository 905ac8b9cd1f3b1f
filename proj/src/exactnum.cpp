#include "u3/exactnum.hpp"

#include <mpfr.h>

#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace u3 {

namespace {

std::mutex g_cyclo_mutex;
std::map<long, std::vector<long>> g_cyclo_cache;

std::vector<long> poly_divide_exact(const std::vector<long>& num, const std::vector<long>& den) {
    // den is monic; division is exact by construction.
    std::vector<long> r = num;
    const std::size_t dn = den.size() - 1;
    std::vector<long> q(num.size() - dn, 0);
    for (std::size_t i = num.size(); i-- > dn;) {
        const long lead = r[i];
        q[i - dn] = lead;
        if (lead == 0) continue;
        for (std::size_t j = 0; j <= dn; ++j) r[i - dn + j] -= lead * den[j];
    }
    return q;
}

int legendre_small(long a, long p) {
    a %= p;
    if (a < 0) a += p;
    if (a == 0) return 0;
    long r = 1, b = a, e = (p - 1) / 2;
    while (e > 0) {
        if (e & 1) r = r * b % p;
        b = b * b % p;
        e >>= 1;
    }
    return r == 1 ? 1 : -1;
}

}  // namespace

long euler_phi(long m) {
    long r = m;
    for (long q = 2; q * q <= m; ++q) {
        if (m % q == 0) {
            while (m % q == 0) m /= q;
            r -= r / q;
        }
    }
    if (m > 1) r -= r / m;
    return r;
}

const std::vector<long>& cyclotomic_poly(long m) {
    if (m < 1) throw std::invalid_argument("cyclotomic_poly: order must be positive");
    {
        std::lock_guard<std::mutex> lk(g_cyclo_mutex);
        auto it = g_cyclo_cache.find(m);
        if (it != g_cyclo_cache.end()) return it->second;
    }
    std::vector<long> num(static_cast<std::size_t>(m) + 1, 0);
    num[0] = -1;
    num[static_cast<std::size_t>(m)] = 1;
    for (long d = 1; d < m; ++d) {
        if (m % d == 0) num = poly_divide_exact(num, cyclotomic_poly(d));
    }
    std::lock_guard<std::mutex> lk(g_cyclo_mutex);
    return g_cyclo_cache.emplace(m, std::move(num)).first->second;
}

ExactNumber::ExactNumber() : m_(1), c_(1, Rational(0)) {}
ExactNumber::ExactNumber(long v) : m_(1), c_(1, Rational(v)) {}
ExactNumber::ExactNumber(const Rational& q) : m_(1), c_(1, q) {}
ExactNumber::ExactNumber(long m, std::vector<Rational> c) : m_(m), c_(std::move(c)) { reduce_(); }

void ExactNumber::reduce_() {
    const std::size_t m = static_cast<std::size_t>(m_);
    if (c_.size() > m) {
        for (std::size_t i = m; i < c_.size(); ++i) c_[i % m] += c_[i];
        c_.resize(m);
    }
    const auto& phi = cyclotomic_poly(m_);
    const std::size_t deg = phi.size() - 1;
    for (std::size_t i = c_.size(); i-- > deg;) {
        if (c_[i] == 0) continue;
        const Rational lead = c_[i];
        for (std::size_t j = 0; j <= deg; ++j) {
            if (phi[j] != 0) c_[i - deg + j] -= lead * phi[j];
        }
    }
    c_.resize(deg, Rational(0));
    for (auto& q : c_) q.canonicalize();
}

ExactNumber ExactNumber::root_of_unity(long m, long k) {
    if (m < 1) throw std::invalid_argument("root_of_unity: m must be >= 1");
    long e = k % m;
    if (e < 0) e += m;
    std::vector<Rational> c(static_cast<std::size_t>(e) + 1, Rational(0));
    c[static_cast<std::size_t>(e)] = 1;
    return ExactNumber(m, std::move(c));
}

ExactNumber ExactNumber::sqrt_of(long n) {
    if (n < 0) throw std::invalid_argument("sqrt_of: negative argument");
    if (n == 0) return ExactNumber(0);
    long sq = 1, rest = n;
    ExactNumber out(1);
    for (long q = 2; rest > 1; ++q) {
        int e = 0;
        while (rest % q == 0) {
            rest /= q;
            ++e;
        }
        for (int i = 0; i < e / 2; ++i) sq *= q;
        if (e % 2 == 1) {
            if (q == 2) {
                out *= root_of_unity(8, 1) + root_of_unity(8, 7);
            } else {
                ExactNumber g(0);
                for (long a = 1; a < q; ++a) g += ExactNumber(legendre_small(a, q)) * root_of_unity(q, a);
                if (q % 4 == 3) g *= -root_of_unity(4, 1);
                out *= g;
            }
        }
    }
    return out * ExactNumber(sq);
}

bool ExactNumber::is_zero() const {
    for (const auto& q : c_)
        if (q != 0) return false;
    return true;
}

bool ExactNumber::is_rational() const {
    for (std::size_t i = 1; i < c_.size(); ++i)
        if (c_[i] != 0) return false;
    return true;
}

Rational ExactNumber::rational_value() const {
    if (!is_rational()) throw std::domain_error("ExactNumber is not rational: " + to_string());
    return c_.empty() ? Rational(0) : c_[0];
}

ExactNumber ExactNumber::embed(long M) const {
    if (M % m_ != 0) throw std::invalid_argument("embed: target order must be a multiple");
    if (M == m_) return *this;
    const long step = M / m_;
    std::vector<Rational> c(static_cast<std::size_t>(step) * c_.size() + 1, Rational(0));
    for (std::size_t i = 0; i < c_.size(); ++i) c[i * static_cast<std::size_t>(step)] = c_[i];
    return ExactNumber(M, std::move(c));
}

ExactNumber ExactNumber::operator-() const {
    ExactNumber r = *this;
    for (auto& q : r.c_) q = -q;
    return r;
}

ExactNumber& ExactNumber::operator+=(const ExactNumber& o) {
    const long M = std::lcm(m_, o.m_);
    if (M != m_) *this = embed(M);
    const ExactNumber b = o.embed(M);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += b.c_[i];
    return *this;
}

ExactNumber& ExactNumber::operator-=(const ExactNumber& o) { return *this += -o; }

ExactNumber& ExactNumber::operator*=(const ExactNumber& o) {
    const long M = std::lcm(m_, o.m_);
    const ExactNumber a = embed(M);
    const ExactNumber b = o.embed(M);
    std::vector<Rational> c(a.c_.size() + b.c_.size(), Rational(0));
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
        if (a.c_[i] == 0) continue;
        for (std::size_t j = 0; j < b.c_.size(); ++j) {
            if (b.c_[j] != 0) c[i + j] += a.c_[i] * b.c_[j];
        }
    }
    *this = ExactNumber(M, std::move(c));
    return *this;
}

ExactNumber ExactNumber::galois(long a) const {
    long aa = a % m_;
    if (aa < 0) aa += m_;
    if (std::gcd(aa, m_) != 1 && m_ > 1) throw std::invalid_argument("galois: exponent not a unit");
    std::vector<Rational> c(static_cast<std::size_t>(m_), Rational(0));
    for (std::size_t i = 0; i < c_.size(); ++i) c[(i * static_cast<std::size_t>(aa)) % static_cast<std::size_t>(m_)] += c_[i];
    return ExactNumber(m_, std::move(c));
}

ExactNumber ExactNumber::inverse() const {
    if (is_zero()) throw std::domain_error("ExactNumber: division by zero");
    if (is_rational()) return ExactNumber(Rational(1) / c_[0]);
    ExactNumber others(1);
    for (long a = 2; a < m_; ++a) {
        if (std::gcd(a, m_) == 1) others *= galois(a);
    }
    const ExactNumber norm = *this * others;
    return others * ExactNumber(Rational(1) / norm.rational_value());
}

ExactNumber& ExactNumber::operator/=(const ExactNumber& o) { return *this *= o.inverse(); }

ExactNumber ExactNumber::pow(long e) const {
    ExactNumber base = e < 0 ? inverse() : *this;
    unsigned long k = static_cast<unsigned long>(e < 0 ? -e : e);
    ExactNumber r(1);
    while (k > 0) {
        if (k & 1UL) r *= base;
        k >>= 1;
        if (k > 0) base *= base;
    }
    return r;
}

bool operator==(const ExactNumber& a, const ExactNumber& b) {
    const long M = std::lcm(a.m_, b.m_);
    const ExactNumber x = a.embed(M);
    const ExactNumber y = b.embed(M);
    return x.c_ == y.c_;
}

ExactNumber ExactNumber::minimal_order() const {
    if (is_rational()) return ExactNumber(rational_value());
    for (long d = 2; d <= m_; ++d) {
        if (m_ % d != 0) continue;
        // Fixed by Gal(Q(zeta_m)/Q(zeta_d)) iff it lies in Q(zeta_d).
        bool fixed = true;
        for (long a = 1; a < m_ && fixed; a += d) {
            if (std::gcd(a, m_) == 1 && galois(a) != *this) fixed = false;
        }
        if (!fixed) continue;
        if (d == m_) return *this;
        // Solve for coordinates in Q(zeta_d) by Gaussian elimination.
        const long pd = euler_phi(d);
        const std::size_t rows = c_.size();
        std::vector<std::vector<Rational>> A(rows, std::vector<Rational>(static_cast<std::size_t>(pd) + 1));
        for (long j = 0; j < pd; ++j) {
            const ExactNumber basis = root_of_unity(d, j).embed(m_);
            for (std::size_t r = 0; r < rows; ++r) A[r][static_cast<std::size_t>(j)] = basis.c_[r];
        }
        for (std::size_t r = 0; r < rows; ++r) A[r][static_cast<std::size_t>(pd)] = c_[r];
        std::size_t piv_row = 0;
        std::vector<long> pivcol;
        for (long col = 0; col < pd; ++col) {
            std::size_t sel = rows;
            for (std::size_t r = piv_row; r < rows; ++r)
                if (A[r][static_cast<std::size_t>(col)] != 0) { sel = r; break; }
            if (sel == rows) continue;
            std::swap(A[sel], A[piv_row]);
            const Rational inv = Rational(1) / A[piv_row][static_cast<std::size_t>(col)];
            for (auto& v : A[piv_row]) v *= inv;
            for (std::size_t r = 0; r < rows; ++r) {
                if (r == piv_row || A[r][static_cast<std::size_t>(col)] == 0) continue;
                const Rational f = A[r][static_cast<std::size_t>(col)];
                for (std::size_t k = 0; k <= static_cast<std::size_t>(pd); ++k) A[r][k] -= f * A[piv_row][k];
            }
            pivcol.push_back(col);
            ++piv_row;
        }
        std::vector<Rational> sol(static_cast<std::size_t>(pd), Rational(0));
        for (std::size_t i = 0; i < pivcol.size(); ++i) sol[static_cast<std::size_t>(pivcol[i])] = A[i][static_cast<std::size_t>(pd)];
        return ExactNumber(d, std::move(sol));
    }
    return *this;
}

std::vector<int> ExactNumber::real_embedding_signs() const {
    if (conj() != *this) throw std::domain_error("real_embedding_signs: element is not real");
    std::vector<int> out;
    if (is_zero()) {
        out.assign(static_cast<std::size_t>(euler_phi(m_)), 0);
        return out;
    }
    for (long a = 1; a <= m_; ++a) {
        if (m_ > 1 && (a == m_ || std::gcd(a, m_) != 1)) continue;
        int sign = 0;
        for (mpfr_prec_t prec = 256; prec <= 8192 && sign == 0; prec *= 2) {
            mpfr_t acc, term, ang, pi, q, bound;
            mpfr_inits2(prec, acc, term, ang, pi, q, bound, static_cast<mpfr_ptr>(nullptr));
            mpfr_set_zero(acc, 1);
            mpfr_set_zero(bound, 1);
            mpfr_const_pi(pi, MPFR_RNDN);
            for (std::size_t i = 0; i < c_.size(); ++i) {
                if (c_[i] == 0) continue;
                const long k = static_cast<long>((static_cast<unsigned long>(a) * i) % static_cast<unsigned long>(m_));
                mpfr_mul_si(ang, pi, 2 * k, MPFR_RNDN);
                mpfr_div_si(ang, ang, m_, MPFR_RNDN);
                mpfr_cos(term, ang, MPFR_RNDN);
                mpfr_set_q(q, c_[i].get_mpq_t(), MPFR_RNDN);
                mpfr_mul(term, term, q, MPFR_RNDN);
                mpfr_add(acc, acc, term, MPFR_RNDN);
                mpfr_abs(q, q, MPFR_RNDN);
                mpfr_add(bound, bound, q, MPFR_RNDU);
            }
            // Each term carries relative error well below 2^{16-prec}.
            mpfr_add_ui(bound, bound, 1, MPFR_RNDU);
            mpfr_mul_2si(bound, bound, 16 - static_cast<long>(prec), MPFR_RNDU);
            mpfr_abs(term, acc, MPFR_RNDN);
            if (mpfr_cmp(term, bound) > 0) sign = mpfr_sgn(acc) > 0 ? 1 : -1;
            mpfr_clears(acc, term, ang, pi, q, bound, static_cast<mpfr_ptr>(nullptr));
        }
        if (sign == 0) throw std::runtime_error("real_embedding_signs: could not certify sign");
        out.push_back(sign);
    }
    return out;
}

bool ExactNumber::totally_nonnegative() const {
    if (is_zero()) return true;
    if (*this != conj()) return false;
    for (int s : real_embedding_signs())
        if (s < 0) return false;
    return true;
}

std::string ExactNumber::to_string() const {
    const ExactNumber r = minimal_order();
    if (r.is_rational()) return r.rational_value().get_str();
    std::ostringstream os;
    bool first = true;
    for (std::size_t i = 0; i < r.c_.size(); ++i) {
        if (r.c_[i] == 0) continue;
        if (!first) os << (r.c_[i] > 0 ? " + " : " - ");
        else if (r.c_[i] < 0) os << "-";
        first = false;
        const Rational a = abs(r.c_[i]);
        if (i == 0) {
            os << a.get_str();
            continue;
        }
        if (a != 1) os << a.get_str() << "*";
        os << "z" << r.m_;
        if (i > 1) os << "^" << i;
    }
    return os.str();
}

FormalSeries::FormalSeries(int M_max) : c_(static_cast<std::size_t>(M_max), ExactNumber(0)) {
    if (M_max < 1) throw std::invalid_argument("FormalSeries: M_max must be >= 1");
}

FormalSeries::FormalSeries(int M_max, std::vector<ExactNumber> coeffs) : FormalSeries(M_max) {
    for (std::size_t i = 0; i < coeffs.size() && i < c_.size(); ++i) c_[i] = coeffs[i];
}

FormalSeries& FormalSeries::operator+=(const FormalSeries& o) {
    if (o.M_max() != M_max()) throw std::invalid_argument("FormalSeries: truncation mismatch");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

FormalSeries FormalSeries::operator+(const FormalSeries& o) const {
    FormalSeries r = *this;
    return r += o;
}

FormalSeries FormalSeries::operator*(const FormalSeries& o) const {
    if (o.M_max() != M_max()) throw std::invalid_argument("FormalSeries: truncation mismatch");
    FormalSeries r(M_max());
    for (std::size_t i = 0; i < c_.size(); ++i) {
        if (c_[i].is_zero()) continue;
        for (std::size_t j = 0; i + j < c_.size(); ++j) r.c_[i + j] += c_[i] * o.c_[j];
    }
    return r;
}

FormalSeries FormalSeries::scaled(const ExactNumber& s) const {
    FormalSeries r = *this;
    for (auto& x : r.c_) x *= s;
    return r;
}

bool FormalSeries::operator==(const FormalSeries& o) const { return c_ == o.c_; }

FormalSeries series_of_geometric(const ExactNumber& a, const ExactNumber& scale, int M_max) {
    FormalSeries r(M_max);
    ExactNumber cur = scale;
    for (int k = 0; k < M_max; ++k) {
        r[k] = cur;
        cur *= a;
    }
    return r;
}

}  // namespace u3
