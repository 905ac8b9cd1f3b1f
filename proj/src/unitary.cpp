#include "u3/unitary.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "u3/errors.hpp"
#include "u3/finitered.hpp"

namespace u3 {

// ---------------------------------------------------------------- matrices

UMat::UMat(const LocalRing* R) : R_(R) { e_.fill(R->zero()); }

UMat UMat::identity(const LocalRing* R) {
    UMat m(R);
    for (int i = 0; i < 3; ++i) m(i, i) = R->one();
    return m;
}

UMat UMat::diag(const LocalElement& a, const LocalElement& b, const LocalElement& c) {
    UMat m(a.ring());
    m(0, 0) = a;
    m(1, 1) = b;
    m(2, 2) = c;
    return m;
}

UMat UMat::antidiag(const LocalElement& a, const LocalElement& b, const LocalElement& c) {
    UMat m(a.ring());
    m(0, 2) = a;
    m(1, 1) = b;
    m(2, 0) = c;
    return m;
}

UMat UMat::operator*(const UMat& o) const {
    UMat r(R_);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            LocalElement s = (*this)(i, 0) * o(0, j);
            s = s + (*this)(i, 1) * o(1, j);
            s = s + (*this)(i, 2) * o(2, j);
            r(i, j) = s;
        }
    return r;
}

UMat UMat::conj_transpose() const {
    UMat r(R_);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i).conj();
    return r;
}

LocalElement UMat::det() const {
    const auto& m = *this;
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

UMat UMat::inverse() const {
    const auto& m = *this;
    const LocalElement di = det().inverse();
    UMat r(R_);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
            r(i, j) = (m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0)) * di;
        }
    return r;
}

int UMat::min_prec() const {
    int p = kValInf;
    for (const auto& x : e_) p = std::min(p, x.prec());
    return p;
}

std::string UMat::to_string() const {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < 3; ++i) {
        os << (i ? "; " : "");
        for (int j = 0; j < 3; ++j) os << (j ? ", " : "") << (*this)(i, j).to_string();
    }
    os << "]";
    return os.str();
}

UMat form_matrix(const LocalRing* R) { return UMat::antidiag(R->one(), R->xi(), -R->one()); }

bool is_unitary(const UMat& g) {
    const UMat d = g.conj_transpose() * form_matrix(g.ring()) * g;
    const UMat J = form_matrix(g.ring());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!d(i, j).congruent(J(i, j))) return false;
    return true;
}

void validate_unitary(const UMat& g) {
    if (!is_unitary(g)) throw InvalidInput("matrix does not preserve the hermitian pairing");
    const LocalElement d = g.det();
    if (!d.is_unit() || !d.norm().congruent(g.ring()->one()))
        throw InvalidInput("determinant is not a norm-one unit");
}

UMat unitary_inverse(const UMat& g) {
    const LocalRing* R = g.ring();
    const LocalElement xi = R->xi();
    const LocalElement xinv = xi.inverse();
    const LocalElement one = R->one();
    const std::array<LocalElement, 3> ci{-one, xinv, one};
    const std::array<LocalElement, 3> dj{-one, xi, one};
    const std::array<int, 3> a{2, 1, 0};  // column of J^{-1} row i
    const std::array<int, 3> b{2, 1, 0};  // row of J column j
    UMat r(R);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = ci[i] * g(b[j], a[i]).conj() * dj[j];
    return r;
}

UMat upper_unipotent(const LocalElement& b, const LocalElement& s) {
    const LocalRing* R = b.ring();
    UMat m = UMat::identity(R);
    m(0, 1) = R->xi() * b.conj();
    m(0, 2) = s + b.norm() * R->half_xi();
    m(1, 2) = b;
    return m;
}

UMat lower_unipotent(const LocalElement& c, const LocalElement& s) {
    const LocalRing* R = c.ring();
    UMat m = UMat::identity(R);
    const LocalElement d = c.conj() * R->xi().inverse();
    m(1, 0) = d;
    m(2, 0) = s - d.norm() * R->half_xi();
    m(2, 1) = c;
    return m;
}

UMat torus(const LocalElement& alpha, const LocalElement& beta) {
    return UMat::diag(alpha.conj(), beta, alpha.inverse());
}

namespace {

// Diagonal of gamma^n.
std::array<LocalElement, 3> gamma_diag(const LocalRing* R, int n) {
    if (R->ramified()) {
        const LocalElement a = (-R->xi()).inverse();  // -xi^{-1}
        LocalElement an = R->one();
        const LocalElement base = n >= 0 ? a : a.inverse();
        for (int i = 0; i < std::abs(n); ++i) an = an * base;
        return {an, R->one(), R->varpi_pow(n)};
    }
    return {R->varpi_pow(-n), R->one(), R->varpi_pow(n)};
}

int xi_val(const LocalRing* R) { return R->ramified() ? 1 : 0; }

}  // namespace

UMat gamma_pow(const LocalRing* R, int n) {
    const auto d = gamma_diag(R, n);
    return UMat::diag(d[0], d[1], d[2]);
}

UMat conj_by_gamma(const UMat& g, int n) {
    const LocalRing* R = g.ring();
    const auto d = gamma_diag(R, n);
    const auto di = gamma_diag(R, -n);
    UMat r(R);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = di[i] * g(i, j) * d[j];
    return r;
}

UMat eta(const LocalRing* R) { return torus(R->nonsquare_unit(), R->one()); }

UMat weyl_w(const LocalRing* R) { return UMat::antidiag(R->one(), R->one(), -R->one()); }

UMat weyl_circ(const LocalRing* R) { return UMat::antidiag(R->xi(), R->one(), R->xi().inverse()); }

UMat weyl_prime(const LocalRing* R) {
    const LocalElement a = R->ramified() ? R->one() : R->varpi_pow(-1);
    return UMat::antidiag(a, R->one(), -(a.conj().inverse()));
}

UMat sigma_y(const LocalRing* R, long y) {
    const LocalElement xi = R->xi();
    return lower_unipotent(xi, xi * xi * R->integer(y));
}

UMat zero_one_rep(const LocalRing* R) {
    const LocalElement xi = R->xi();
    UMat m = UMat::identity(R);
    m(2, 0) = xi * xi;
    return m;
}

// ---------------------------------------------------------------- subgroups

std::string Subgroup::name() const {
    switch (kind) {
        case SubgroupKind::K_circ: return "K_circ";
        case SubgroupKind::K_prime: return "K_prime";
        case SubgroupKind::Iwahori: return "Iwahori";
        case SubgroupKind::I_r: return "I_r(" + std::to_string(param) + ")";
        case SubgroupKind::I_21: return "I_21";
        case SubgroupKind::K_T: return "K_T";
        case SubgroupKind::K_paramodular: return "K_paramodular(" + std::to_string(param) + ")";
        case SubgroupKind::K_gross: return "K_gross";
        case SubgroupKind::I_gross: return "I_gross";
        case SubgroupKind::K_gross_j: return "K_gross_j(" + std::to_string(param) + ")";
    }
    return "?";
}

Subgroup Subgroup::parse(const std::string& s) {
    auto param_of = [&](const std::string& prefix) {
        const auto open = s.find('(');
        if (s.rfind(prefix, 0) != 0 || open == std::string::npos || s.back() != ')')
            throw InvalidInput("bad subgroup name: " + s);
        return std::stoi(s.substr(open + 1, s.size() - open - 2));
    };
    if (s == "K_circ") return {SubgroupKind::K_circ, 0};
    if (s == "K_prime") return {SubgroupKind::K_prime, 0};
    if (s == "Iwahori") return {SubgroupKind::Iwahori, 0};
    if (s == "I_21") return {SubgroupKind::I_21, 0};
    if (s == "K_T") return {SubgroupKind::K_T, 0};
    if (s == "K_gross") return {SubgroupKind::K_gross, 0};
    if (s == "I_gross") return {SubgroupKind::I_gross, 0};
    if (s.rfind("I_r(", 0) == 0) return {SubgroupKind::I_r, param_of("I_r(")};
    if (s.rfind("K_paramodular(", 0) == 0) return {SubgroupKind::K_paramodular, param_of("K_paramodular(")};
    if (s.rfind("K_gross_j(", 0) == 0) return {SubgroupKind::K_gross_j, param_of("K_gross_j(")};
    throw InvalidInput("unknown subgroup: " + s);
}

namespace {

struct Shape {
    std::array<int, 9> minv;
    bool unit_diag = false;
    bool unit_middle = false;
};

Shape shape_of(const LocalRing* R, const Subgroup& S) {
    const int x = xi_val(R);
    const bool ram = R->ramified();
    auto need_unram = [&] {
        if (ram) throw InvalidInput(S.name() + " is defined here for unramified E only");
    };
    switch (S.kind) {
        case SubgroupKind::K_circ:
        case SubgroupKind::K_gross:
            return {{0, x, x, -x, 0, 0, -x, 0, 0}, false, false};
        case SubgroupKind::K_prime: return {{0, x, x - 1, 1 - x, 0, 0, 1 - x, 1, 0}, false, true};
        case SubgroupKind::Iwahori:
        case SubgroupKind::I_gross: return {{0, x, x, 1 - x, 0, 0, 1 - x, 1, 0}, true, true};
        case SubgroupKind::K_gross_j: {
            const int j = S.param;
            if (j <= 0) return {{0, x, x, -x, 0, 0, -x, 0, 0}, false, false};
            return {{0, x, x, 1 - x, 0, 0, j - 1, 1, 0}, true, true};
        }
        case SubgroupKind::I_21: return {{0, x, x, 1 - x, 0, 0, 2 - x, 1, 0}, true, true};
        case SubgroupKind::I_r: {
            need_unram();
            const int r = S.param;
            return {{0, 0, 0, r, 0, 0, r, r, 0}, true, true};
        }
        case SubgroupKind::K_T: need_unram(); return {{0, 1, 1, 1, 0, 1, 1, 1, 0}, true, true};
        case SubgroupKind::K_paramodular: {
            need_unram();
            const int r = S.param;
            return {{0, 0, -r, r, 0, 0, r, r, 0}, true, true};
        }
    }
    return {};
}

bool is_gross_kind(const Subgroup& S) {
    return S.kind == SubgroupKind::K_gross || S.kind == SubgroupKind::I_gross || S.kind == SubgroupKind::K_gross_j;
}

}  // namespace

int gross_sign(const UMat& k) {
    const LocalRing* R = k.ring();
    if (!R->ramified()) throw InvalidInput("the Gross subgroup is defined for ramified E");
    const long p = R->p();
    // D^{-1} k D with D = diag(-xi/2, 1, 1) reduces into O3 for the form [[0,0,1],[0,2,0],[1,0,0]].
    const LocalElement h = -R->half_xi();
    const LocalElement hinv = h.inverse();
    O3Element o{p, {}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            LocalElement v = k(i, j);
            if (i == 0 && j != 0) v = hinv * v;
            if (i != 0 && j == 0) v = v * h;
            if (!v.divisible_by(0)) throw InvalidInput("gross_sign: element is not in K_circ");
            o.m[static_cast<std::size_t>(3 * i + j)] = v.with_prec(1).residue().a;
        }
    if (!preserves_form(o)) throw std::logic_error("gross_sign: reduction does not preserve the quadratic form");
    return sign_character(o);
}

bool membership(const UMat& g, const Subgroup& S) {
    const LocalRing* R = g.ring();
    if (is_gross_kind(S) && !R->ramified()) throw InvalidInput(S.name() + " requires ramified E");
    const Shape sh = shape_of(R, S);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!g(i, j).divisible_by(sh.minv[static_cast<std::size_t>(3 * i + j)])) return false;
    if (sh.unit_diag)
        for (int i = 0; i < 3; ++i)
            if (!g(i, i).is_unit()) return false;
    if (sh.unit_middle && !g(1, 1).is_unit()) return false;
    if (is_gross_kind(S)) return gross_sign(g) == 1;
    return true;
}

// ---------------------------------------------------------------- lattices

const char* to_string(VertexType v) {
    switch (v) {
        case VertexType::self_dual: return "self_dual";
        case VertexType::almost_self_dual: return "almost_self_dual";
        case VertexType::neither: return "neither";
    }
    return "?";
}

HermitianLattice lattice_dual(const HermitianLattice& L) {
    const LocalRing* R = L.basis.ring();
    const UMat JB = form_matrix(R) * L.basis;
    UMat D = JB.inverse().conj_transpose();
    const LocalElement xinv = R->xi().inverse();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) D(i, j) = xinv * D(i, j);
    return {D};
}

bool lattice_contains(const HermitianLattice& L2, const HermitianLattice& L1) {
    const UMat M = L2.basis.inverse() * L1.basis;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!M(i, j).divisible_by(0)) return false;
    return true;
}

bool lattice_equal(const HermitianLattice& a, const HermitianLattice& b) {
    return lattice_contains(a, b) && lattice_contains(b, a);
}

HermitianLattice lattice_scale(const HermitianLattice& L, int k) {
    const LocalRing* R = L.basis.ring();
    const LocalElement w = R->varpi_pow(k);
    UMat B = L.basis;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) B(i, j) = w * B(i, j);
    return {B};
}

HermitianLattice standard_lattice_circ(const LocalRing* R) {
    const LocalElement xinv = R->xi().inverse();
    return {UMat::diag(R->one(), xinv, xinv)};
}

HermitianLattice standard_lattice_prime(const LocalRing* R) {
    const LocalElement xinv = R->xi().inverse();
    return {UMat::diag(R->one(), xinv, xinv * R->uniformizer())};
}

VertexType classify_vertex(const HermitianLattice& L) {
    const HermitianLattice D = lattice_dual(L);
    if (lattice_equal(L, D)) return VertexType::self_dual;
    const HermitianLattice Lw = lattice_scale(L, -1);
    if (lattice_contains(D, L) && lattice_contains(Lw, D) && !lattice_equal(D, Lw)) return VertexType::almost_self_dual;
    return VertexType::neither;
}

// ---------------------------------------------------------------- decompositions

IwasawaResult iwasawa_decompose(const UMat& g, const Subgroup& K) {
    const LocalRing* R = g.ring();
    bool prime = false;
    switch (K.kind) {
        case SubgroupKind::K_circ:
        case SubgroupKind::K_gross: break;
        case SubgroupKind::K_prime: prime = true; break;
        default: throw InvalidInput("iwasawa_decompose: K must be K_circ, K_prime or K_gross");
    }
    const int x = xi_val(R);
    const int shift = prime ? x - 1 : x;
    const LocalElement& r1 = g(2, 0);
    const LocalElement& r2 = g(2, 1);
    const LocalElement& r3 = g(2, 2);
    std::optional<int> v1, v3;
    if (r1.visible()) v1 = r1.valuation() + shift;
    if (r3.visible()) v3 = r3.valuation();
    std::optional<int> m;
    if (v3 && (v1 || *v3 <= r1.prec() + shift)) m = *v3;
    if (v1 && (v3 || *v1 <= r3.prec())) m = m ? std::min(*m, *v1) : *v1;
    if (!m) throw PrecisionLoss("iwasawa_decompose: bottom row has no visible digit");
    const LocalElement scale = R->varpi_pow(-*m);
    const LocalElement q1 = r1 * scale, q2 = r2 * scale, q3 = r3 * scale;
    UMat L = UMat::identity(R);
    LocalElement t33;
    UMat k0;
    if (v3 && *v3 == *m) {
        t33 = q3;
        const LocalElement ti = t33.inverse();
        const LocalElement c = q2 * ti;
        L(1, 0) = c.conj() * R->xi().inverse();
        L(2, 0) = q1 * ti;
        L(2, 1) = c;
        k0 = torus(ti, R->one()) * L;
    } else {
        const UMat w = prime ? weyl_prime(R) : weyl_circ(R);
        const LocalElement a = w(0, 2), b = w(2, 0);
        t33 = q1 * b.inverse();
        const LocalElement ti = t33.inverse();
        const LocalElement c = q2 * ti;
        L(1, 0) = c.conj() * R->xi().inverse();
        L(2, 0) = q3 * (a * t33).inverse();
        L(2, 1) = c;
        k0 = torus(ti, R->one()) * L * w;
    }
    const UMat b0 = g * unitary_inverse(k0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < i; ++j)
            if (b0(i, j).visible()) throw std::logic_error("iwasawa_decompose: Borel part is not upper triangular");
    return {*m, b0, k0};
}

int cartan_exponent(const UMat& g) {
    const LocalRing* R = g.ring();
    const int x = xi_val(R);
    std::optional<int> mn;
    int invisible_floor = kValInf;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const int adj = x * ((i != 0 ? 1 : 0) - (j != 0 ? 1 : 0));
            const LocalElement& e = g(i, j);
            if (e.visible()) {
                const int v = e.valuation() + adj;
                mn = mn ? std::min(*mn, v) : v;
            } else {
                invisible_floor = std::min(invisible_floor, e.prec() + adj);
            }
        }
    if (!mn || invisible_floor < *mn) throw PrecisionLoss("cartan_exponent: undetermined entry");
    return -*mn;
}

// ---------------------------------------------------------------- coset representatives

std::vector<UMat> coset_reps(const LocalRing* R, const Subgroup& K) {
    std::vector<UMat> out;
    const long p = R->p();
    switch (K.kind) {
        case SubgroupKind::K_circ:
        case SubgroupKind::K_gross: {
            if (!R->ramified()) {
                out.push_back(UMat::identity(R));
                const UMat w = weyl_circ(R);
                for (long bi = 0; bi < R->q(); ++bi)
                    for (long s = 0; s < p; ++s)
                        out.push_back(upper_unipotent(R->lift({bi % p, bi / p}), R->integer(s)) * w);
            } else {
                for (long c = 0; c < p; ++c) out.push_back(lower_unipotent(R->integer(c), R->zero()));
                out.push_back(weyl_circ(R));
            }
            if (K.kind == SubgroupKind::K_gross) {
                if (!R->ramified()) throw InvalidInput("K_gross requires ramified E");
                const UMat e = eta(R);
                for (auto& r : out)
                    if (gross_sign(r) != 1) r = r * e;
            }
            return out;
        }
        case SubgroupKind::K_prime: {
            for (long s = 0; s < p; ++s) {
                const LocalElement sv = R->ramified() ? R->integer(s) : R->integer(s) * R->varpi_pow(-1);
                out.push_back(upper_unipotent(R->zero(), sv));
            }
            out.push_back(weyl_prime(R));
            return out;
        }
        case SubgroupKind::K_paramodular: throw InvalidInput("paramodular groups are not enumerated");
        default: out.push_back(UMat::identity(R)); return out;
    }
}

long valence(const LocalRing* R) {
    const auto reps = coset_reps(R, {SubgroupKind::K_circ, 0});
    const Subgroup I{SubgroupKind::Iwahori, 0};
    for (std::size_t i = 0; i < reps.size(); ++i) {
        if (!membership(reps[i], {SubgroupKind::K_circ, 0})) throw std::logic_error("valence: representative outside K_circ");
        for (std::size_t j = i + 1; j < reps.size(); ++j)
            if (membership(unitary_inverse(reps[i]) * reps[j], I))
                throw std::logic_error("valence: two representatives share an Iwahori coset");
    }
    return static_cast<long>(reps.size());
}

// ---------------------------------------------------------------- enumeration

namespace {

enum class CoordType { E, Qp, Unit, Sign };

struct Coord {
    CoordType type;
    int shift = 0;  // E: varpi units; Qp: p units
    int depth = 0;
    LocalElement val;
};

struct Frame {
    const LocalRing* R;
    std::vector<UMat> reps;
    Subgroup S;
    bool filter = false;
    bool torus = false;
    bool upper = false;
};

Subgroup ambient_of(const Subgroup& S) {
    switch (S.kind) {
        case SubgroupKind::K_circ: return S;
        case SubgroupKind::K_prime: return S;
        case SubgroupKind::K_gross: return S;
        case SubgroupKind::K_gross_j:
            if (S.param <= 0) return {SubgroupKind::K_gross, 0};
            return {SubgroupKind::Iwahori, 0};
        case SubgroupKind::K_paramodular: throw InvalidInput("paramodular groups are not enumerated");
        default: return {SubgroupKind::Iwahori, 0};
    }
}

bool needs_filter(const Subgroup& S) {
    switch (S.kind) {
        case SubgroupKind::K_circ:
        case SubgroupKind::K_prime:
        case SubgroupKind::Iwahori: return false;
        case SubgroupKind::K_gross: return true;  // the torus factor leaves K''
        case SubgroupKind::K_gross_j: return true;
        default: return true;
    }
}

LocalElement raise(const LocalElement& v, int prec) { return LocalElement(v.ring(), v.A(), v.B(), v.k(), prec); }

// All values of a coordinate at its depth.
std::vector<LocalElement> values_of(const LocalRing* R, CoordType t, int shift, int depth) {
    std::vector<LocalElement> out;
    const long p = R->p();
    switch (t) {
        case CoordType::Sign:
            out.push_back(R->one());
            out.push_back(-R->one());
            break;
        case CoordType::Qp: {
            const long M = R->pow_p(depth);
            for (long s = 0; s < M; ++s) out.push_back(R->from_qp(s, shift, depth));
            break;
        }
        case CoordType::E:
        case CoordType::Unit: {
            const long Ma = R->ramified() ? R->pow_p((depth + 1) / 2) : R->pow_p(depth);
            const long Mb = R->ramified() ? R->pow_p(depth / 2) : R->pow_p(depth);
            for (long b = 0; b < Mb; ++b)
                for (long a = 0; a < Ma; ++a) {
                    if (t == CoordType::Unit && a % p == 0 && (R->ramified() || b % p == 0)) continue;
                    out.push_back(R->from_digits(a, b, shift, depth));
                }
            break;
        }
    }
    return out;
}

Rational cell_measure(const LocalRing* R, CoordType t, int depth) {
    Rational m = 1;
    switch (t) {
        case CoordType::Sign: m = Rational(1, 2); break;
        case CoordType::Qp:
            for (int i = 0; i < depth; ++i) m /= R->p();
            break;
        case CoordType::E:
            for (int i = 0; i < depth; ++i) m /= R->q();
            break;
        case CoordType::Unit:
            m = Rational(1, R->q() - 1);
            for (int i = 1; i < depth; ++i) m /= R->q();
            break;
    }
    return m;
}

std::vector<Coord> children(const LocalRing* R, const Coord& c) {
    std::vector<Coord> out;
    const long p = R->p();
    if (c.type == CoordType::Sign) return out;
    if (c.type == CoordType::Qp) {
        const int e = R->e();
        const LocalElement base = raise(c.val, e * (c.shift + c.depth + 1));
        for (long d = 0; d < p; ++d) {
            Coord n = c;
            n.depth = c.depth + 1;
            n.val = base + R->from_qp(d, c.shift + c.depth, 1);
            out.push_back(n);
        }
        return out;
    }
    const int np = c.shift + c.depth + 1;
    const LocalElement base = raise(c.val, np);
    for (long idx = 0; idx < R->q(); ++idx) {
        if (c.type == CoordType::Unit && c.depth == 0 && idx == 0) continue;
        Coord n = c;
        n.depth = c.depth + 1;
        n.val = base + R->from_digits(idx % p, R->ramified() ? 0 : idx / p, c.shift + c.depth, 1);
        out.push_back(n);
    }
    return out;
}

// Coordinate layout: [c, s-, (alpha, z, eps), (b, s)].
std::vector<std::pair<CoordType, int>> layout(const Frame& F) {
    const LocalRing* R = F.R;
    std::vector<std::pair<CoordType, int>> L;
    L.push_back({CoordType::E, 1});
    L.push_back({CoordType::Qp, R->ramified() ? 0 : 1});
    if (F.torus) {
        L.push_back({CoordType::Unit, 0});
        L.push_back({CoordType::Unit, 0});
        if (R->ramified()) L.push_back({CoordType::Sign, 0});
    }
    if (F.upper) {
        L.push_back({CoordType::E, 0});
        L.push_back({CoordType::Qp, R->ramified() ? 1 : 0});
    }
    return L;
}

std::vector<int> depths_for(const Frame& F, const EnumDepths& d) {
    std::vector<int> out{d.lower_c, d.lower_s};
    if (F.torus) {
        out.push_back(std::max(1, d.torus));
        out.push_back(std::max(1, d.torus));
        if (F.R->ramified()) out.push_back(0);
    }
    if (F.upper) {
        out.push_back(d.upper);
        out.push_back(d.upper);
    }
    return out;
}

UMat torus_upper(const Frame& F, const std::vector<Coord>& cs) {
    const LocalRing* R = F.R;
    UMat m = UMat::identity(R);
    std::size_t i = 2;
    if (F.torus) {
        const LocalElement& a = cs[i].val;
        const LocalElement& z = cs[i + 1].val;
        LocalElement beta = z * z.conj().inverse();
        i += 2;
        if (R->ramified()) {
            beta = cs[i].val * beta;
            ++i;
        }
        m = torus(a, beta);
    }
    if (F.upper) {
        m = m * upper_unipotent(cs[i].val, cs[i + 1].val);
    }
    return m;
}

UMat lower_part(const std::vector<Coord>& cs) { return lower_unipotent(cs[0].val, cs[1].val); }

Frame make_frame(const LocalRing* R, const Subgroup& S, const EnumDepths& d) {
    if (is_gross_kind(S) && !R->ramified()) throw InvalidInput(S.name() + " requires ramified E");
    Frame F{R, coset_reps(R, ambient_of(S)), S, needs_filter(S), d.torus > 0, d.upper > 0};
    return F;
}

long count_values(const LocalRing* R, CoordType t, int depth) {
    switch (t) {
        case CoordType::Sign: return 2;
        case CoordType::Qp: return R->pow_p(depth);
        case CoordType::E: {
            long n = 1;
            for (int i = 0; i < depth; ++i) n *= R->q();
            return n;
        }
        case CoordType::Unit: {
            long n = R->q() - 1;
            for (int i = 1; i < depth; ++i) n *= R->q();
            return n;
        }
    }
    return 1;
}

void fold_cells(const Frame& F, const EnumOptions& opt, const std::function<void(int, const UMat&, const Rational&)>& fn) {
    const LocalRing* R = F.R;
    const auto lay = layout(F);
    const auto dep = depths_for(F, opt.depths);
    // Estimate and budget.
    long est = static_cast<long>(F.reps.size());
    for (std::size_t i = 0; i < lay.size(); ++i) {
        const long n = count_values(R, lay[i].first, dep[i]);
        if (est > opt.budget / std::max(1L, n)) throw BudgetExceeded("enumeration of " + F.S.name() + " exceeds the cell budget");
        est *= n;
    }
    if (est > opt.budget) throw BudgetExceeded("enumeration of " + F.S.name() + " exceeds the cell budget");
    std::atomic<long> evaluated{0};

    std::vector<std::vector<LocalElement>> vals(lay.size());
    for (std::size_t i = 0; i < lay.size(); ++i) vals[i] = values_of(R, lay[i].first, lay[i].second, dep[i]);
    Rational base = Rational(1, static_cast<long>(F.reps.size()));
    for (std::size_t i = 0; i < lay.size(); ++i) base *= cell_measure(R, lay[i].first, dep[i]);

    // Inner (torus x upper) products, shared by all outer cells.
    std::vector<std::vector<Coord>> inner_coords;
    {
        std::vector<Coord> cur(lay.size());
        std::function<void(std::size_t)> rec = [&](std::size_t i) {
            if (i == lay.size()) {
                inner_coords.push_back(cur);
                return;
            }
            for (const auto& v : vals[i]) {
                cur[i] = Coord{lay[i].first, lay[i].second, dep[i], v};
                rec(i + 1);
            }
        };
        rec(2);
    }
    std::vector<UMat> inner;
    inner.reserve(inner_coords.size());
    for (const auto& cs : inner_coords) inner.push_back(torus_upper(F, cs));

    struct Outer {
        std::size_t rep;
        std::size_t ci, si;
    };
    std::vector<Outer> outers;
    for (std::size_t r = 0; r < F.reps.size(); ++r)
        for (std::size_t ci = 0; ci < vals[0].size(); ++ci)
            for (std::size_t si = 0; si < vals[1].size(); ++si) outers.push_back({r, ci, si});

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < lay.size(); ++i)
        if (lay[i].first != CoordType::Sign && (i < 2 || dep[i] > 0)) active.push_back(i);

    std::function<void(int, std::size_t, std::vector<Coord>&, const Rational&, int)> refine;
    auto visit = [&](int th, std::size_t rep, std::vector<Coord>& cs, const UMat& g, const Rational& w, int step) {
        if (++evaluated > opt.budget) throw BudgetExceeded("enumeration of " + F.S.name() + " exceeds the cell budget");
        try {
            if (F.filter && !membership(g, F.S)) return;
            fn(th, g, w);
        } catch (const PrecisionLoss&) {
            if (step >= opt.max_refine) throw;
            refine(th, rep, cs, w, step);
        }
    };
    refine = [&](int th, std::size_t rep, std::vector<Coord>& cs, const Rational& w, int step) {
        const std::size_t idx = active[static_cast<std::size_t>(step) % active.size()];
        const Coord saved = cs[idx];
        const auto kids = children(R, saved);
        const Rational cw = w / static_cast<long>(kids.size());
        for (const auto& k : kids) {
            cs[idx] = k;
            const UMat g = F.reps[rep] * lower_part(cs) * torus_upper(F, cs);
            visit(th, rep, cs, g, cw, step + 1);
        }
        cs[idx] = saved;
    };

    const int T = std::max(1, opt.threads);
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(T));
    auto work = [&](int th) {
        try {
            for (std::size_t oi = static_cast<std::size_t>(th); oi < outers.size(); oi += static_cast<std::size_t>(T)) {
                const auto& o = outers[oi];
                std::vector<Coord> cs(lay.size());
                cs[0] = Coord{lay[0].first, lay[0].second, dep[0], vals[0][o.ci]};
                cs[1] = Coord{lay[1].first, lay[1].second, dep[1], vals[1][o.si]};
                const UMat outer = F.reps[o.rep] * lower_part(cs);
                for (std::size_t ii = 0; ii < inner.size(); ++ii) {
                    for (std::size_t k = 2; k < lay.size(); ++k) cs[k] = inner_coords[ii][k];
                    visit(th, o.rep, cs, outer * inner[ii], base, 0);
                }
            }
        } catch (...) {
            errs[static_cast<std::size_t>(th)] = std::current_exception();
        }
    };
    if (T == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < T; ++t) pool.emplace_back(work, t);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace

ExactNumber Histogram::total() const {
    ExactNumber s;
    for (const auto& [v, w] : bins) s += v * ExactNumber(w);
    return s;
}

void Histogram::add(const ExactNumber& v, const Rational& w) {
    for (auto& [bv, bw] : bins)
        if (bv == v) {
            bw += w;
            return;
        }
    bins.emplace_back(v, w);
}

void Histogram::merge(const Histogram& o) {
    for (const auto& [v, w] : o.bins) add(v, w);
    mass += o.mass;
    cells += o.cells;
}

long estimate_cells(const LocalRing* R, const Subgroup& S, const EnumDepths& d) {
    const Frame F = make_frame(R, S, d);
    const auto lay = layout(F);
    const auto dep = depths_for(F, d);
    long est = static_cast<long>(F.reps.size());
    for (std::size_t i = 0; i < lay.size(); ++i) est *= count_values(R, lay[i].first, dep[i]);
    return est;
}

Histogram integrate_cells(const LocalRing* R, const Subgroup& S, const EnumOptions& opt, const CellValue& f) {
    const Frame F = make_frame(R, S, opt.depths);
    const int T = std::max(1, opt.threads);
    std::vector<Histogram> parts(static_cast<std::size_t>(T));
    fold_cells(F, opt, [&](int th, const UMat& g, const Rational& w) {
        const auto v = f(g);
        auto& h = parts[static_cast<std::size_t>(th)];
        h.mass += w;
        ++h.cells;
        if (v) h.add(*v, w);
    });
    Histogram out;
    for (const auto& h : parts) out.merge(h);
    // Canonical bin order, independent of the partition.
    std::sort(out.bins.begin(), out.bins.end(), [](const auto& a, const auto& b) {
        return a.first.to_string() < b.first.to_string();
    });
    return out;
}

std::vector<CellRecord> enumerate_subgroup(const LocalRing* R, const Subgroup& S, const EnumOptions& opt) {
    const Frame F = make_frame(R, S, opt.depths);
    EnumOptions o = opt;
    o.threads = 1;
    std::vector<CellRecord> out;
    Rational mass = 0;
    fold_cells(F, o, [&](int, const UMat& g, const Rational& w) {
        out.push_back({g, w});
        mass += w;
    });
    for (auto& c : out) c.measure /= mass;
    return out;
}

Rational conjugation_index(const LocalRing* R, const Subgroup& S, int n, const EnumOptions& opt) {
    if (n < 1) throw InvalidInput("conjugation_index: n >= 1 required");
    Subgroup K;
    switch (S.kind) {
        case SubgroupKind::K_circ:
        case SubgroupKind::Iwahori: K = {SubgroupKind::K_circ, 0}; break;
        case SubgroupKind::K_prime: K = S; break;
        case SubgroupKind::K_gross:
        case SubgroupKind::I_gross: K = {SubgroupKind::K_gross, 0}; break;
        default: throw InvalidInput("conjugation_index: unsupported subgroup " + S.name());
    }
    const Histogram h = integrate_cells(R, S, opt, [&](const UMat& g) -> std::optional<ExactNumber> {
        return membership(conj_by_gamma(g, n), K) ? ExactNumber(1) : ExactNumber(0);
    });
    Rational inside = 0;
    for (const auto& [v, w] : h.bins)
        if (v == ExactNumber(1)) inside += w;
    if (inside == 0) throw std::logic_error("conjugation_index: empty intersection");
    Rational idx = h.mass / inside;
    idx.canonicalize();
    return idx;
}

MonteCarloResult sample_cells(const LocalRing* R, const Subgroup& S, const EnumDepths& d, long samples,
                              unsigned long seed, const CellValue& f, int max_refine) {
    const Frame F = make_frame(R, S, d);
    const auto lay = layout(F);
    const auto dep = depths_for(F, d);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < lay.size(); ++i)
        if (lay[i].first != CoordType::Sign && (i < 2 || dep[i] > 0)) active.push_back(i);
    auto random_value = [&](CoordType t, int shift, int depth) {
        const long p = R->p();
        for (;;) {
            if (t == CoordType::Sign) return (rng() & 1) ? R->one() : -R->one();
            if (t == CoordType::Qp) {
                const long M = R->pow_p(depth);
                return R->from_qp(static_cast<long>(rng() % static_cast<unsigned long>(M)), shift, depth);
            }
            const long Ma = R->ramified() ? R->pow_p((depth + 1) / 2) : R->pow_p(depth);
            const long Mb = R->ramified() ? R->pow_p(depth / 2) : R->pow_p(depth);
            const long a = static_cast<long>(rng() % static_cast<unsigned long>(Ma));
            const long b = static_cast<long>(rng() % static_cast<unsigned long>(Mb));
            if (t == CoordType::Unit && a % p == 0 && (R->ramified() || b % p == 0)) continue;
            return R->from_digits(a, b, shift, depth);
        }
    };
    MonteCarloResult out;
    ExactNumber sum;
    Rational sumq = 0, sumsq = 0;
    long got = 0, attempts = 0;
    while (got < samples) {
        if (++attempts > 100 * samples + 1000) throw std::runtime_error("sample_cells: acceptance rate too low");
        const std::size_t rep = static_cast<std::size_t>(rng() % F.reps.size());
        std::vector<Coord> cs(lay.size());
        for (std::size_t i = 0; i < lay.size(); ++i)
            cs[i] = Coord{lay[i].first, lay[i].second, dep[i], random_value(lay[i].first, lay[i].second, dep[i])};
        std::optional<std::optional<ExactNumber>> val;
        bool inside = true;
        for (int step = 0; !val; ++step) {
            try {
                const UMat g = F.reps[rep] * lower_part(cs) * torus_upper(F, cs);
                if (F.filter && !membership(g, F.S)) {
                    inside = false;
                    break;
                }
                val = f(g);
            } catch (const PrecisionLoss&) {
                if (step >= max_refine) throw;
                const std::size_t idx = active[static_cast<std::size_t>(step) % active.size()];
                const auto kids = children(R, cs[idx]);
                cs[idx] = kids[static_cast<std::size_t>(rng() % kids.size())];
            }
        }
        if (!inside) continue;
        ++got;
        const ExactNumber v = (val && *val) ? **val : ExactNumber(0);
        sum += v;
        if (v.is_rational()) {
            const Rational q = v.rational_value();
            sumq += q;
            sumsq += q * q;
        } else {
            out.rational_values = false;
        }
    }
    out.samples = got;
    out.mean = sum / ExactNumber(got);
    if (out.rational_values && got > 1) {
        const Rational mean = sumq / got;
        Rational var = (sumsq - Rational(got) * mean * mean) / (got - 1);
        out.variance_of_mean = var / got;
        out.variance_of_mean.canonicalize();
    }
    return out;
}

}  // namespace u3
