#include "u3/repinv.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "u3/errors.hpp"

namespace u3 {

namespace {

ExactNumber ppow(long p, long e) {
    Rational r = 1;
    for (long i = 0; i < std::abs(e); ++i) r *= p;
    if (e < 0) r = 1 / r;
    return ExactNumber(r);
}

// |a|_E^{num/2} for a valuation va of a (in varpi units).
ExactNumber abs_half_power(const LocalRing& R, int va, int num) {
    const long p = R.p();
    if (!R.ramified()) return ppow(p, -static_cast<long>(va) * num);
    const long e2 = -static_cast<long>(va) * num;  // exponent of sqrt(p)
    ExactNumber out = ppow(p, (e2 - (((e2 % 2) + 2) % 2)) / 2);
    if (((e2 % 2) + 2) % 2 == 1) out *= ExactNumber::sqrt_of(p);
    return out;
}

bool trivial(const ResidueCharacter& c, const LocalRing& R) { return c.order(R) == 1; }

ExactNumber lambda_of(const CharacterSpec& mu, const LocalElement& a) {
    const LocalRing& R = *a.ring();
    const int v = a.valuation();
    const LocalElement u = a * R.varpi_pow(-v);
    return mu.lambda_on_uniformizer.pow(v) * eval_character(mu.lambda_residue, u);
}

ExactNumber mu_generic(const CharacterSpec& mu, const UMat& b, int extra) {
    const LocalRing& R = *b.ring();
    const int va = -b(2, 2).valuation();  // alpha = b_33^{-1}
    const int num = (mu.use_w ? -1 : 1) + extra;
    return lambda_of(mu, b(0, 0)) * eval_character(mu.nu_residue, b(1, 1)) * abs_half_power(R, va, num);
}

void check_invariant_vector(const Subgroup& K, const CharacterSpec& mu, const LocalRing& R) {
    switch (K.kind) {
        case SubgroupKind::K_circ:
        case SubgroupKind::K_prime:
            if (!trivial(mu.lambda_residue, R) || !trivial(mu.nu_residue, R))
                throw NoInvariantVector("mu is ramified: no " + K.name() + "-invariant vector");
            return;
        case SubgroupKind::K_gross: {
            if (!R.ramified()) throw InvalidInput("K_gross requires ramified E");
            // mu must agree with the sign character on the torus of K_circ.
            const UMat t1 = torus(R.nonsquare_unit(), R.one());
            const UMat t2 = torus(R.one(), -R.one());
            for (const UMat* t : {&t1, &t2})
                if (mu_torus(mu, *t) != ExactNumber(gross_sign(*t)))
                    throw NoInvariantVector("mu is not the sign character on the torus of K_circ");
            return;
        }
        default: throw InvalidInput("eval_f_K: K must be K_circ, K_prime or K_gross");
    }
}

}  // namespace

// ---------------------------------------------------------------- characters

CharacterSpec CharacterSpec::w() const {
    CharacterSpec o = *this;
    o.use_w = !use_w;
    return o;
}

std::string CharacterSpec::describe() const {
    std::ostringstream os;
    os << "lambda(varpi)=" << lambda_on_uniformizer.to_string() << " lambda_res=" << lambda_residue.exponent
       << " nu_res=" << nu_residue.exponent << (use_w ? " (w)" : "");
    return os.str();
}

CharacterSpec CharacterSpec::unramified_lambda0() { return CharacterSpec{}; }

CharacterSpec CharacterSpec::inert_tame(const LocalRing& R, long k) {
    if (R.ramified()) throw InvalidInput("inert_tame requires unramified E");
    const long p = R.p();
    CharacterSpec s;
    s.lambda_on_uniformizer = ExactNumber(-1);
    s.lambda_residue = {CharTarget::Fp2_star, -k * (p - 1)};
    s.nu_residue = {CharTarget::Fp2_one, -2 * k};
    return s;
}

CharacterSpec CharacterSpec::ramified_symplectic(const LocalRing& R, int sign) {
    if (!R.ramified()) throw InvalidInput("ramified_symplectic requires ramified E");
    const long p = R.p();
    CharacterSpec s;
    // lambda(xi)^2 = lambda(-1) = (-1)^{(p-1)/2}
    const ExactNumber root = (p % 4 == 1) ? ExactNumber(1) : ExactNumber::root_of_unity(4, 1);
    s.lambda_on_uniformizer = sign >= 0 ? root : -root;
    s.lambda_residue = {CharTarget::Fp_star, (p - 1) / 2};
    s.nu_residue = {CharTarget::Fp_star, (p - 1) / 2};
    return s;
}

const char* to_string(PacketMember m) {
    switch (m) {
        case PacketMember::pi_n: return "pi_n";
        case PacketMember::pi_2: return "pi_2";
        case PacketMember::pi_c: return "pi_c";
    }
    return "?";
}

const char* to_string(PhiMode m) {
    switch (m) {
        case PhiMode::exact: return "exact";
        case PhiMode::pushforward: return "pushforward";
        case PhiMode::montecarlo: return "montecarlo";
    }
    return "?";
}

ExactNumber mu_torus(const CharacterSpec& mu, const UMat& t) { return mu_generic(mu, t, 0); }

ExactNumber mu_delta_half(const CharacterSpec& mu, const UMat& b) { return mu_generic(mu, b, 2); }

ExactNumber mu_gamma(const CharacterSpec& mu, const LocalRing& R, int n) { return mu_torus(mu, gamma_pow(&R, n)); }

ExactNumber eval_f_K(const UMat& g, const Subgroup& K, const CharacterSpec& mu) {
    const LocalRing& R = *g.ring();
    check_invariant_vector(K, mu, R);
    const IwasawaResult res = iwasawa_decompose(g, K);
    ExactNumber v = mu_delta_half(mu, res.b);
    if (K.kind == SubgroupKind::K_gross && gross_sign(res.k) != 1) v = -v;
    return v;
}

// ---------------------------------------------------------------- double cosets

namespace {

using Line = std::array<LocalElement, 3>;
using LineKey = std::array<std::tuple<long, long, int>, 3>;

// Lines are taken in the lattice L = O^3 * D^{-1} stabilized by the maximal compact containing K:
// a row r of g gives the integral coordinates rho = r * D.
struct LineFrame {
    std::array<LocalElement, 3> d;
};

LineFrame frame_for(const LocalRing& R, const Subgroup& K) {
    if (K.kind == SubgroupKind::K_prime)
        return {{R.one(), R.one(), R.ramified() ? R.one() : R.varpi_pow(1)}};
    return {{R.xi(), R.one(), R.one()}};
}

struct LineSpace {
    const LocalRing* R;
    int N;
    LineFrame F;
    std::vector<Line> lines;
    std::map<LineKey, long> index;

    // Scale so that the first unit coordinate is 1; reduce mod varpi^N.
    LineKey key_of(Line& l) const {
        int first = -1;
        for (int i = 0; i < 3; ++i)
            if (l[static_cast<std::size_t>(i)].with_prec(N).is_unit()) {
                first = i;
                break;
            }
        if (first < 0) throw std::logic_error("line is not primitive");
        const LocalElement u = l[static_cast<std::size_t>(first)].inverse();
        LineKey k;
        for (std::size_t i = 0; i < 3; ++i) {
            l[i] = (l[i] * u).with_prec(N);
            k[i] = {l[i].A(), l[i].B(), l[i].k()};
        }
        return k;
    }

    long find(Line l) const {
        const auto it = index.find(key_of(l));
        if (it == index.end()) throw std::logic_error("line not in the isotropic list");
        return it->second;
    }

    // r J^{-1} r^* with r = rho D^{-1}, scaled to an integral form whose smallest coefficient is a unit.
    bool isotropic(const Line& l) const {
        std::array<LocalElement, 3> r;
        for (std::size_t i = 0; i < 3; ++i) r[i] = l[i] * F.d[i].inverse();
        const LocalElement q = r[2] * r[0].conj() - r[0] * r[2].conj() + r[1].norm() * R->xi().inverse();
        const int v13 = F.d[0].valuation() + F.d[2].valuation();
        const int v2 = R->xi().valuation() + 2 * F.d[1].valuation();
        return (q * R->varpi_pow(std::max(v13, v2))).divisible_by(N);
    }
};

std::vector<LocalElement> digits_of(const LocalRing& R, int shift, int N) {
    std::vector<LocalElement> out;
    const int depth = N - shift;
    if (depth <= 0) {
        out.push_back(R.zero().with_prec(N));
        return out;
    }
    const long Ma = R.ramified() ? R.pow_p((depth + 1) / 2) : R.pow_p(depth);
    const long Mb = R.ramified() ? R.pow_p(depth / 2) : R.pow_p(depth);
    for (long b = 0; b < Mb; ++b)
        for (long a = 0; a < Ma; ++a) out.push_back(R.from_digits(a, b, shift, depth));
    return out;
}

LineSpace isotropic_lines(const LocalRing& R, const Subgroup& K, int N) {
    LineSpace S{&R, N, frame_for(R, K), {}, {}};
    const auto all = digits_of(R, 0, N);
    const auto deep = digits_of(R, 1, N);
    const LocalElement one = R.one().with_prec(N);
    auto add = [&](Line l) {
        if (!S.isotropic(l)) return;
        const LineKey k = S.key_of(l);
        if (S.index.emplace(k, static_cast<long>(S.lines.size())).second) S.lines.push_back(l);
    };
    for (const auto& b : all)
        for (const auto& c : all) add({one, b, c});
    for (const auto& a : deep)
        for (const auto& c : all) add({a, one, c});
    for (const auto& a : deep)
        for (const auto& b : deep) add({a, b, one});
    return S;
}

Line line_of(const UMat& g, const LineSpace& S) {
    Line l;
    for (std::size_t j = 0; j < 3; ++j) l[j] = g(2, static_cast<int>(j)) * S.F.d[j];
    int m = kValInf;
    for (const auto& x : l)
        if (x.visible()) m = std::min(m, x.valuation());
    const LocalElement s = S.R->varpi_pow(-m);
    for (auto& x : l) x = (x * s).with_prec(S.N);
    return l;
}

// D^{-1} k D, integral for k in the maximal compact of the frame.
UMat scaled(const UMat& k, const LineFrame& F) {
    UMat m = k;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            m(i, j) = F.d[static_cast<std::size_t>(i)].inverse() * k(i, j) * F.d[static_cast<std::size_t>(j)];
    return m;
}

Line act(const Line& l, const UMat& m) {
    Line o;
    for (int j = 0; j < 3; ++j) o[static_cast<std::size_t>(j)] = l[0] * m(0, j) + l[1] * m(1, j) + l[2] * m(2, j);
    return o;
}

struct UnionFind {
    std::vector<long> p;
    explicit UnionFind(long n) : p(static_cast<std::size_t>(n)) { std::iota(p.begin(), p.end(), 0L); }
    long find(long x) {
        while (p[static_cast<std::size_t>(x)] != x) x = p[static_cast<std::size_t>(x)] = p[static_cast<std::size_t>(p[static_cast<std::size_t>(x)])];
        return x;
    }
    void unite(long a, long b) {
        a = find(a);
        b = find(b);
        if (a != b) p[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

std::vector<LocalElement> torus_alphas(const LocalRing& R) {
    std::vector<LocalElement> out{R.nonsquare_unit(), R.one() + R.uniformizer()};
    if (R.ramified())
        out.push_back(R.one() + R.uniformizer() * R.uniformizer());
    else
        out.push_back(R.one() + R.uniformizer() * R.theta());
    return out;
}

bool in_K(const UMat& g, const Subgroup& K) {
    try {
        return membership(g, K);
    } catch (const InvalidInput&) {
        return false;
    }
}

// Topological generators of K.
std::vector<UMat> k_generators(const LocalRing& R, const Subgroup& K, int N) {
    const LocalRing* r = &R;
    std::vector<UMat> cand, out, rejected;
    for (const auto& a : torus_alphas(R)) {
        cand.push_back(torus(a, R.one()));
        cand.push_back(torus(R.one(), a * a.conj().inverse()));
    }
    if (R.ramified()) cand.push_back(torus(R.one(), -R.one()));
    cand.push_back(weyl_circ(r));
    cand.push_back(weyl_prime(r));
    cand.push_back(weyl_w(r));
    cand.push_back(weyl_circ(r) * eta(r));
    cand.push_back(weyl_prime(r) * eta(r));
    for (const auto& g : cand) (in_K(g, K) ? out : rejected).push_back(g);
    // Index-two subgroups: squares and products of pairs of rejected elements.
    for (std::size_t i = 0; i < rejected.size(); ++i)
        for (std::size_t j = i; j < rejected.size(); ++j) {
            const UMat g = rejected[i] * rejected[j];
            if (in_K(g, K)) out.push_back(g);
        }
    const std::vector<LocalElement> units =
        R.ramified() ? std::vector<LocalElement>{R.one(), R.xi()} : std::vector<LocalElement>{R.one(), R.theta()};
    for (const auto& u : units) {
        for (int j = -3; j <= N + 3; ++j) {
            const UMat g = lower_unipotent(R.varpi_pow(j) * u, R.zero());
            if (in_K(g, K)) {
                out.push_back(g);
                break;
            }
        }
        for (int j = -3; j <= N + 3; ++j) {
            const UMat g = upper_unipotent(R.varpi_pow(j) * u, R.zero());
            if (in_K(g, K)) {
                out.push_back(g);
                break;
            }
        }
    }
    for (int i = -3; i <= N + 3; ++i) {
        const LocalElement s = R.varpi_pow(R.e() * i);
        const UMat lo = lower_unipotent(R.zero(), s);
        if (in_K(lo, K)) {
            out.push_back(lo);
            break;
        }
    }
    for (int i = -3; i <= N + 3; ++i) {
        const LocalElement s = R.varpi_pow(R.e() * i);
        const UMat up = upper_unipotent(R.zero(), s);
        if (in_K(up, K)) {
            out.push_back(up);
            break;
        }
    }
    return out;
}

void require_congruence_closed(const Subgroup& K) {
    switch (K.kind) {
        case SubgroupKind::K_circ:
        case SubgroupKind::K_prime:
        case SubgroupKind::Iwahori:
        case SubgroupKind::K_T:
        case SubgroupKind::K_gross:
        case SubgroupKind::I_gross: return;
        default: throw InvalidInput(K.name() + " does not contain the first congruence subgroup of K_circ");
    }
}

}  // namespace

DoubleCosetResult double_cosets(const LocalRing& R, const Subgroup& K, int N) {
    if (N < 1) throw InvalidInput("double_cosets: N >= 1 required");
    require_congruence_closed(K);
    if (K.kind == SubgroupKind::K_T && R.ramified()) throw InvalidInput("K_T is defined for unramified E");
    const LocalRing* r = &R;
    LineSpace S = isotropic_lines(R, K, N);
    const long n = static_cast<long>(S.lines.size());
    UnionFind uf(n);
    for (const auto& g : k_generators(R, K, N)) {
        const UMat m = scaled(g, S.F);
        for (long i = 0; i < n; ++i) uf.unite(i, S.find(act(S.lines[static_cast<std::size_t>(i)], m)));
    }
    std::map<long, long> orbit_of_root, sizes;
    std::vector<long> roots;
    for (long i = 0; i < n; ++i) {
        const long rt = uf.find(i);
        if (orbit_of_root.emplace(rt, static_cast<long>(roots.size())).second) roots.push_back(rt);
        ++sizes[rt];
    }
    const std::size_t k = roots.size();
    DoubleCosetResult out;
    out.n_lines = n;
    std::vector<std::optional<UMat>> rep(k);
    std::vector<std::string> label(k);
    auto offer = [&](const UMat& g, const std::string& name) {
        const long o = orbit_of_root.at(uf.find(S.find(line_of(g, S))));
        auto& slot = rep[static_cast<std::size_t>(o)];
        if (!slot) {
            slot = g;
            label[static_cast<std::size_t>(o)] = name;
        }
    };
    // Named representatives first.
    offer(UMat::identity(r), "1");
    offer(weyl_w(r), "w");
    if (!R.ramified()) {
        offer(zero_one_rep(r), "[0,1]");
        for (long y = 0; y < R.p(); ++y) offer(sigma_y(r, y), "sigma_" + std::to_string(y));
    }
    auto missing = [&] { return std::any_of(rep.begin(), rep.end(), [](const auto& x) { return !x.has_value(); }); };
    if (missing()) {
        const auto reps = coset_reps(r, {SubgroupKind::K_circ, 0});
        const auto cs = digits_of(R, 1, std::max(N, 2));
        long counter = 0;
        for (const auto& ri : reps) {
            const UMat rinv = unitary_inverse(ri);
            for (const auto& c : cs)
                for (long s = 0; s < R.pow_p(std::max(N - 1, 1)) && missing(); ++s) {
                    const LocalElement sv = R.integer(s) * R.varpi_pow(R.ramified() ? 0 : 1);
                    offer(lower_unipotent(c, sv) * rinv, "orbit_" + std::to_string(counter++));
                }
            if (!missing()) break;
        }
    }
    if (missing()) throw std::logic_error("double_cosets: an orbit has no representative");
    for (std::size_t i = 0; i < k; ++i) {
        out.reps.push_back(*rep[i]);
        out.labels.push_back(label[i]);
        out.orbit_sizes.push_back(sizes[roots[i]]);
    }
    return out;
}

InvariantCount invariant_dimension(const LocalRing& R, const Subgroup& K, const CharacterSpec& mu, int N) {
    require_congruence_closed(K);
    const DoubleCosetResult dc = double_cosets(R, K, N);
    // Torus residue classes on which mu is nontrivial.
    std::vector<UMat> bad;
    std::vector<LocalElement> betas;
    {
        std::map<std::pair<long, long>, bool> seen;
        for (const auto& z : R.residue_units()) {
            const LocalElement zl = R.lift(z);
            const LocalElement b = zl * zl.conj().inverse();
            const Residue rb = b.residue();
            if (seen.emplace(std::make_pair(rb.a, rb.b), true).second) betas.push_back(b);
        }
        if (R.ramified()) betas.push_back(-R.one());
    }
    for (const auto& a : R.residue_units())
        for (const auto& b : betas) {
            const UMat t = torus(R.lift(a), b);
            if (mu_torus(mu, t) != ExactNumber(1)) bad.push_back(t);
        }
    std::vector<UMat> unips;
    {
        std::vector<Residue> all_res;
        for (long i = 0; i < R.q(); ++i) all_res.push_back({i % R.p(), R.ramified() ? 0 : i / R.p()});
        const long ns = R.ramified() ? 1 : R.p();
        for (const auto& br : all_res)
            for (long s = 0; s < ns; ++s) unips.push_back(upper_unipotent(R.lift(br), R.integer(s)));
    }
    InvariantCount out{K, 0, static_cast<long>(dc.reps.size()), {}};
    for (std::size_t i = 0; i < dc.reps.size(); ++i) {
        const UMat& s = dc.reps[i];
        const UMat si = unitary_inverse(s);
        bool ok = true;
        for (const auto& t : bad) {
            for (const auto& n : unips)
                if (membership(si * t * n * s, K)) {
                    ok = false;
                    break;
                }
            if (!ok) break;
        }
        if (ok) {
            ++out.total_dim;
            out.supported_cosets.push_back(dc.labels[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------- matrix coefficients

PhiResult phi_sequence(const LocalRing& R, const Subgroup& K, const CharacterSpec& mu, int n, PhiMode mode,
                       const PhiOptions& opt) {
    if (R.ramified()) throw InvalidInput("phi_sequence requires unramified E");
    if (K.kind != SubgroupKind::K_circ && K.kind != SubgroupKind::K_prime)
        throw InvalidInput("phi_sequence: K must be K_circ or K_prime");
    if (n < 1) throw InvalidInput("phi_sequence: n >= 1 required");
    check_invariant_vector(K, mu, R);
    const CellValue f = [&](const UMat& g) -> std::optional<ExactNumber> {
        return eval_f_K(conj_by_gamma(g, n), K, mu);
    };
    PhiResult out;
    out.mode = mode;
    EnumOptions eo = opt.enumeration;
    // The bottom row of gamma^{-n} k gamma^n needs about 2n more digits of k.
    eo.max_refine = std::max(eo.max_refine, 4 * n + 6);
    if (mode != PhiMode::exact) {
        eo.depths.torus = 0;
        eo.depths.upper = 0;
    }
    if (mode == PhiMode::montecarlo) {
        const MonteCarloResult mc = sample_cells(&R, K, eo.depths, opt.samples, opt.seed, f, eo.max_refine + 8);
        out.average = mc.mean;
        out.cells = mc.samples;
        if (mc.rational_values) out.variance_of_mean = mc.variance_of_mean;
    } else {
        const Histogram h = integrate_cells(&R, K, eo, f);
        out.average = h.total() / ExactNumber(h.mass);
        out.cells = h.cells;
    }
    out.phi = ppow(R.p(), 5L * n) * out.average;
    return out;
}

Rational volume_strata(const LocalRing& R, const Subgroup& K, int j, const EnumOptions& opt) {
    if (j < 0) throw InvalidInput("volume_strata: j >= 0 required");
    if (j == 0) return 1;
    EnumOptions eo = opt;
    eo.depths.torus = 0;
    eo.depths.upper = 0;
    Histogram h;
    if (!R.ramified()) {
        if (K.kind != SubgroupKind::K_prime) throw InvalidInput("volume_strata: unramified strata are defined for K_prime");
        h = integrate_cells(&R, K, eo, [&](const UMat& g) -> std::optional<ExactNumber> {
            return ExactNumber(g(2, 0).divisible_by(j + 1) ? 1 : 0);
        });
    } else {
        if (K.kind != SubgroupKind::I_gross && K.kind != SubgroupKind::K_gross)
            throw InvalidInput("volume_strata: ramified strata are defined inside I_gross");
        const Subgroup Kj{SubgroupKind::K_gross_j, j};
        h = integrate_cells(&R, {SubgroupKind::I_gross, 0}, eo, [&](const UMat& g) -> std::optional<ExactNumber> {
            return ExactNumber(membership(g, Kj) ? 1 : 0);
        });
    }
    Rational inside = 0;
    for (const auto& [v, w] : h.bins)
        if (v == ExactNumber(1)) inside += w;
    Rational idx = h.mass / inside;
    idx.canonicalize();
    return idx;
}

Rational measure_c0(const LocalRing& R) {
    if (R.ramified()) throw InvalidInput("measure_c0 requires unramified E");
    const LocalRing* r = &R;
    const Subgroup Kp{SubgroupKind::K_prime, 0}, I{SubgroupKind::Iwahori, 0};
    long total = 0, in_i = 0;
    for (long bi = 0; bi < R.q(); ++bi)
        for (long s = 0; s < R.p(); ++s) {
            const UMat n = upper_unipotent(R.lift({bi % R.p(), bi / R.p()}), R.integer(s) * R.varpi_pow(-1));
            if (!membership(n, Kp)) throw std::logic_error("measure_c0: element outside K'");
            ++total;
            if (membership(n, I)) ++in_i;
        }
    const long kp_i = static_cast<long>(coset_reps(r, Kp).size());
    Rational c0 = Rational(kp_i) * Rational(in_i, total);
    c0.canonicalize();
    return c0;
}

ExactNumber macdonald_gamma(const LocalRing& R, const CharacterSpec& nu) {
    const ExactNumber p2 = ppow(R.p(), 2);
    auto factor = [&](const ExactNumber& a) {
        const ExactNumber den = ExactNumber(1) - a;
        if (den.is_zero()) throw PoleInGamma("macdonald_gamma: nu(gamma^k) = 1");
        return (ExactNumber(1) - p2 * a) / den;
    };
    return factor(mu_gamma(nu, R, -2)) * factor(mu_gamma(nu, R, -1));
}

// ---------------------------------------------------------------- rank of translates

namespace {

long rank_of(std::vector<std::vector<ExactNumber>> rows) {
    long rank = 0;
    const std::size_t ncols = rows.empty() ? 0 : rows[0].size();
    for (std::size_t c = 0; c < ncols && static_cast<std::size_t>(rank) < rows.size(); ++c) {
        std::size_t piv = static_cast<std::size_t>(rank);
        while (piv < rows.size() && rows[piv][c].is_zero()) ++piv;
        if (piv == rows.size()) continue;
        std::swap(rows[piv], rows[static_cast<std::size_t>(rank)]);
        const auto& pr = rows[static_cast<std::size_t>(rank)];
        for (std::size_t i = static_cast<std::size_t>(rank) + 1; i < rows.size(); ++i) {
            if (rows[i][c].is_zero()) continue;
            const ExactNumber f = rows[i][c] / pr[c];
            for (std::size_t k = c; k < ncols; ++k) rows[i][k] -= f * pr[k];
        }
        ++rank;
    }
    return rank;
}

}  // namespace

RankResult gamma_translate_rank(const LocalRing& R, const Subgroup& K, const CharacterSpec& mu, int r, int N) {
    if (R.ramified()) throw InvalidInput("gamma_translate_rank requires unramified E");
    if (K.kind != SubgroupKind::K_circ && K.kind != SubgroupKind::K_prime)
        throw InvalidInput("gamma_translate_rank: K must be K_circ or K_prime");
    if (r < 0) throw InvalidInput("gamma_translate_rank: r >= 0 required");
    const LocalRing* rp = &R;
    std::vector<UMat> gpow;
    for (int j = 0; j <= r; ++j) gpow.push_back(gamma_pow(rp, j));
    auto F = [&](const UMat& g, int j) { return eval_f_K(g * gpow[static_cast<std::size_t>(j)], K, mu); };

    // Points of K_circ, one per I_{2r}-coset met: rep * n^-(c, s).
    const int depth = std::max(1, std::min(N, 2 * r) - 1);
    const auto reps = coset_reps(rp, {SubgroupKind::K_circ, 0});
    const auto cs = digits_of(R, 1, 1 + depth);
    std::vector<UMat> used;
    std::vector<std::vector<ExactNumber>> cols;  // one column per point
    long rank = 0, points = 0;
    for (std::size_t ri = 0; ri < reps.size() && rank < r + 1; ++ri)
        for (long s = 0; s < R.pow_p(depth) && rank < r + 1; ++s)
            for (std::size_t ci = 0; ci < cs.size() && rank < r + 1; ci += std::max<std::size_t>(1, cs.size() / 16)) {
                const UMat g = reps[ri] * lower_unipotent(cs[ci], R.integer(s) * R.varpi_pow(1));
                std::vector<ExactNumber> col;
                for (int j = 0; j <= r; ++j) col.push_back(F(g, j));
                ++points;
                auto trial = cols;
                trial.push_back(col);
                std::vector<std::vector<ExactNumber>> rows(static_cast<std::size_t>(r + 1),
                                                           std::vector<ExactNumber>(trial.size()));
                for (std::size_t c = 0; c < trial.size(); ++c)
                    for (int j = 0; j <= r; ++j) rows[static_cast<std::size_t>(j)][c] = trial[c][static_cast<std::size_t>(j)];
                const long nr = rank_of(rows);
                if (nr > rank) {
                    rank = nr;
                    cols = std::move(trial);
                    used.push_back(g);
                }
            }
    RankResult out{rank, points, std::vector<bool>(static_cast<std::size_t>(r + 1), true)};
    if (r == 0) return out;
    // Generators of I_{2r}.
    std::vector<UMat> gens;
    for (const auto& a : torus_alphas(R)) {
        gens.push_back(torus(a, R.one()));
        gens.push_back(torus(R.one(), a * a.conj().inverse()));
    }
    for (const auto& u : {R.one(), R.theta()}) {
        gens.push_back(upper_unipotent(u, R.zero()));
        gens.push_back(lower_unipotent(R.varpi_pow(2 * r) * u, R.zero()));
    }
    gens.push_back(upper_unipotent(R.zero(), R.one()));
    gens.push_back(lower_unipotent(R.zero(), R.varpi_pow(2 * r)));
    used.insert(used.begin(), UMat::identity(rp));
    for (int j = 0; j <= r; ++j)
        for (const auto& g : used) {
            const ExactNumber v = F(g, j);
            for (const auto& k : gens)
                if (F(g * k, j) != v) out.invariant[static_cast<std::size_t>(j)] = false;
        }
    return out;
}

// ---------------------------------------------------------------- ramified strata

StrataReport ramified_strata(const LocalRing& R, const CharacterSpec& mu, int n, const EnumOptions& opt) {
    if (!R.ramified()) throw InvalidInput("ramified_strata requires ramified E");
    if (n < 1) throw InvalidInput("ramified_strata: n >= 1 required");
    const Subgroup K{SubgroupKind::K_gross, 0};
    const Subgroup I{SubgroupKind::I_gross, 0};
    const Subgroup Kj{SubgroupKind::K_gross_j, 2 * n};
    check_invariant_vector(K, mu, R);
    StrataReport out;
    // [K'':I''] from the mass of I'' inside K''.
    {
        EnumOptions eo = opt;
        eo.depths = EnumDepths{1, 1, 1, 1};
        const Histogram h = integrate_cells(&R, K, eo, [&](const UMat& g) -> std::optional<ExactNumber> {
            return ExactNumber(membership(g, I) ? 1 : 0);
        });
        Rational inside = 0;
        for (const auto& [v, w] : h.bins)
            if (v == ExactNumber(1)) inside += w;
        out.index_K_I = h.mass / inside;
        out.index_K_I.canonicalize();
    }
    EnumOptions eo = opt;
    eo.depths.torus = 0;
    eo.depths.upper = 0;
    auto integral = [&](bool want_inner) {
        const Histogram h = integrate_cells(&R, K, eo, [&](const UMat& g) -> std::optional<ExactNumber> {
            if (membership(g, Kj) != want_inner) return ExactNumber(0);
            return eval_f_K(conj_by_gamma(g, n), K, mu);
        });
        return h.total() / ExactNumber(h.mass) * ExactNumber(out.index_K_I);
    };
    out.inner = integral(true);
    out.complement = integral(false);
    const long p = R.p();
    out.inner_matches = out.inner == ppow(p, 1 - 2L * n);
    // Rational lower bound for sqrt(p).
    mpz_class s;
    const mpz_class scale = 1000000;
    mpz_sqrt(s.get_mpz_t(), mpz_class(p * scale * scale).get_mpz_t());
    const Rational sqrt_lo(s, scale);
    Rational bound = (sqrt_lo + 1) * ppow(p, -2L * n).rational_value();
    bound *= bound;
    const ExactNumber norm = out.complement * out.complement.conj();
    out.complement_bounded = (ExactNumber(bound) - norm).totally_nonnegative();
    return out;
}

}  // namespace u3
