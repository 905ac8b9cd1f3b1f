#include "u3/intertwine.hpp"

#include <array>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "u3/errors.hpp"

namespace u3 {

namespace {

using Key = std::array<long, 9>;

// f_{y'} on K_circ: supported on B(O) sigma_{y'} K_T, value mu(torus of b) there. K_T contains the
// first congruence subgroup, so f_{y'} is a function of k mod p.
class SectionTable {
public:
    SectionTable(const LocalRing& R, const CharacterSpec& mu, long y_prime) {
        const LocalRing* r = &R;
        const UMat sigma = sigma_y(r, y_prime);
        std::vector<LocalElement> alphas, betas;
        std::map<Residue, bool> seen;
        for (const auto& u : R.residue_units()) {
            const LocalElement a = R.lift(u);
            alphas.push_back(a);
            const LocalElement b = a * a.conj().inverse();
            if (seen.emplace(b.residue(), true).second) betas.push_back(b);
        }
        std::vector<UMat> unips;
        for (long i = 0; i < R.q(); ++i)
            for (long s = 0; s < R.p(); ++s)
                unips.push_back(upper_unipotent(R.lift({i % R.p(), i / R.p()}), R.integer(s)));
        std::vector<UMat> tori;
        for (const auto& a : alphas)
            for (const auto& b : betas) tori.push_back(torus(a, b));
        for (const auto& t : tori) {
            const ExactNumber v = mu_torus(mu, t);
            for (const auto& n : unips) {
                const UMat left = t * n * sigma;
                for (const auto& t2 : tori) {
                    const Key k = key_of(left * t2);
                    const auto [it, fresh] = table_.emplace(k, v);
                    if (!fresh && it->second != v)
                        throw NoInvariantVector("mu is not trivial on B meet sigma K_T sigma^{-1}");
                }
            }
        }
    }

    static Key key_of(const UMat& k) {
        Key out;
        const LocalRing* R = k.ring();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                out[static_cast<std::size_t>(3 * i + j)] = R->res_index(k(i, j).residue());
        return out;
    }

    ExactNumber value(const UMat& k) const {
        const auto it = table_.find(key_of(k));
        return it == table_.end() ? ExactNumber(0) : it->second;
    }

    std::size_t size() const { return table_.size(); }

private:
    std::map<Key, ExactNumber> table_;
};

struct Cell {
    LocalElement b;
    LocalElement s;
    Rational measure;
};

struct Accumulator {
    std::vector<ExactNumber> coeff;
    std::vector<Rational> measure;
    long cells = 0;
    explicit Accumulator(int T) : coeff(static_cast<std::size_t>(T + 1)), measure(static_cast<std::size_t>(T + 1)) {}
    void merge(const Accumulator& o) {
        for (std::size_t i = 0; i < coeff.size(); ++i) {
            coeff[i] += o.coeff[i];
            measure[i] += o.measure[i];
        }
        cells += o.cells;
    }
};

LocalElement with_digit(const LocalElement& x, const LocalElement& digit, int new_prec) {
    // widen first: the new digit sits at the old precision and would be truncated otherwise
    const LocalElement y = LocalElement(x.ring(), x.A(), x.B(), x.k(), new_prec) + digit;
    return y.with_prec(new_prec);
}

// Precision of N(b), which is what z = s + N(b) h inherits from b.
int norm_precision(const LocalElement& b) { return b.prec() + std::min(0, b.valuation_lb()); }

struct Integrator {
    const LocalRing& R;
    const CharacterSpec& mu;
    const SectionTable& table;
    UMat w, sigma;
    LocalElement det_w_sigma;  // det(w n sigma), exact since det n = 1
    int T;
    const ShellOptions& opt;
    std::atomic<long>& evaluated;
    std::optional<ExactNumber> weight_override;  // integrate 1 instead of the section

    // Returns false when the cell must be refined.
    bool evaluate(const Cell& c, Accumulator& acc) const {
        const UMat n = upper_unipotent(c.b, c.s);
        const UMat g = w * n * sigma;
        int vmin = R.N();
        for (int j = 0; j < 3; ++j) {
            const LocalElement& x = g(2, j);
            if (!x.visible()) continue;
            if (x.valuation() < -T) return true;  // beyond the truncation shell
            vmin = std::min(vmin, x.valuation());
        }
        // an unknown entry could still undercut the visible minimum
        for (int j = 0; j < 3; ++j)
            if (!g(2, j).visible() && g(2, j).prec() <= vmin) return false;
        try {
            const IwasawaResult res = iwasawa_decompose(g, {SubgroupKind::K_circ, 0});
            const UMat& k0 = res.k;
            int j = 0;
            while (j < 3 && !k0(2, j).is_unit()) ++j;
            if (j == 3) throw std::logic_error("iwasawa: bottom row of k is not primitive");
            const LocalElement t33 = g(2, j) * k0(2, j).inverse();
            const int e = -t33.valuation();
            if (e > T) return true;
            if (e < 0) throw std::logic_error("intertwining integrand with negative exponent");
            ExactNumber v(1);
            if (!weight_override) {
                const LocalElement alpha = t33.inverse();
                const LocalElement beta = det_w_sigma * k0.det().inverse() * alpha.conj().inverse() * alpha;
                v = table.value(k0);
                if (!v.is_zero()) v *= mu_delta_half(mu, UMat::diag(alpha.conj(), beta, t33));
            }
            acc.coeff[static_cast<std::size_t>(e)] += v * ExactNumber(c.measure);
            acc.measure[static_cast<std::size_t>(e)] += c.measure;
            ++acc.cells;
            return true;
        } catch (const PrecisionLoss&) {
            return false;
        }
    }

    void run(const Cell& c, Accumulator& acc, int depth) const {
        if (++evaluated > opt.budget) throw BudgetExceeded("intertwining integral exceeds the cell budget");
        if (evaluate(c, acc)) return;
        if (depth >= opt.max_refine + 3 * T) throw PrecisionLoss("intertwining integrand undetermined at maximal refinement");
        if (norm_precision(c.b) <= c.s.prec()) {
            const int j = c.b.prec();
            const LocalElement pj = R.varpi_pow(j);
            const Rational m = c.measure / R.q();
            for (const auto& u : R.residue_units()) run({with_digit(c.b, R.lift(u) * pj, j + 1), c.s, m}, acc, depth + 1);
            run({with_digit(c.b, R.zero(), j + 1), c.s, m}, acc, depth + 1);
        } else {
            const int i = c.s.prec();
            const LocalElement pi = R.varpi_pow(i);
            const Rational m = c.measure / R.p();
            for (long d = 0; d < R.p(); ++d) run({c.b, with_digit(c.s, R.integer(d) * pi, i + 1), m}, acc, depth + 1);
        }
    }
};

Accumulator integrate(const LocalRing& R, const CharacterSpec& mu, long y_prime, long y, int T,
                      const ShellOptions& opt, const std::optional<UMat>& right, bool unit_weight) {
    if (R.ramified()) throw InvalidInput("intertwining series require unramified E");
    if (T < 0) throw InvalidInput("truncation must be nonnegative");
    const LocalRing* r = &R;
    const SectionTable table(R, mu, ((y_prime % R.p()) + R.p()) % R.p());
    const int Tb = (T + 1) / 2;
    std::atomic<long> evaluated{0};
    UMat sigma = sigma_y(r, ((y % R.p()) + R.p()) % R.p());
    if (right) sigma = sigma * *right;
    Integrator I{R, mu, table, weyl_w(r), sigma, weyl_w(r).det() * sigma.det(), T, opt, evaluated, std::nullopt};
    if (unit_weight) I.weight_override = ExactNumber(1);

    // Top-level cells: b in varpi^{-Tb} O mod varpi^{1-Tb}, s in p^{-T} Z_p mod p^{1-T}.
    std::vector<Cell> top;
    Rational base = Rational(R.pow_p(2 * Tb)) * Rational(R.pow_p(T));
    base /= R.q() * R.p();
    for (long i = 0; i < R.q(); ++i)
        for (long d = 0; d < R.p(); ++d)
            top.push_back({R.from_digits(i % R.p(), i / R.p(), -Tb, 1), R.from_qp(d, -T, 1), base});

    const int nt = std::max(1, opt.threads);
    std::vector<Accumulator> parts(static_cast<std::size_t>(nt), Accumulator(T));
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(nt));
    auto work = [&](int th) {
        try {
            for (std::size_t i = static_cast<std::size_t>(th); i < top.size(); i += static_cast<std::size_t>(nt))
                I.run(top[i], parts[static_cast<std::size_t>(th)], 0);
        } catch (...) {
            errs[static_cast<std::size_t>(th)] = std::current_exception();
        }
    };
    if (nt == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int th = 0; th < nt; ++th) pool.emplace_back(work, th);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errs)
        if (e) std::rethrow_exception(e);
    Accumulator out(T);
    for (const auto& p : parts) out.merge(p);
    return out;
}

}  // namespace

IntertwiningCoefficients intertwining_coefficients(const LocalRing& R, const CharacterSpec& mu, long y_prime, long y,
                                                   int M_max, const ShellOptions& opt,
                                                   const std::optional<UMat>& right_translate) {
    if (M_max < 1) throw InvalidInput("M_max >= 1 required");
    const int T = M_max + 2;
    const Accumulator acc = integrate(R, mu, y_prime, y, T, opt, right_translate, false);
    IntertwiningCoefficients out;
    out.y_prime = y_prime;
    out.y = y;
    out.series = FormalSeries(T + 1, acc.coeff);
    out.shell_measures = acc.measure;
    out.cells = acc.cells;
    return out;
}

ExactNumber shell_integral(const LocalRing& R, const CharacterSpec& mu, long y_prime, long y, int m,
                           const ShellOptions& opt) {
    if (m < 0) throw InvalidInput("shell index must be nonnegative");
    const Accumulator acc = integrate(R, mu, y_prime, y, m, opt, std::nullopt, false);
    return acc.coeff[static_cast<std::size_t>(m)];
}

FormalSeries expand_closed_form(const ExactNumber& C, const ExactNumber& a, int kappa, int M_max) {
    if (kappa == 0) throw InvalidInput("kappa must be nonzero");
    std::vector<ExactNumber> c(static_cast<std::size_t>(M_max));
    const int step = std::abs(kappa);
    if (kappa > 0) {
        ExactNumber term = C;
        for (int m = 0; m < M_max; m += step) {
            c[static_cast<std::size_t>(m)] = term;
            term *= a;
        }
    } else {
        const ExactNumber ai = a.inverse();
        ExactNumber term = -C * ai;
        for (int m = step; m < M_max; m += step) {
            c[static_cast<std::size_t>(m)] = term;
            term *= ai;
        }
    }
    return FormalSeries(M_max, c);
}

std::optional<int> match_kappa(const std::vector<FormalSeries>& series, const ExactNumber& C, const ExactNumber& a,
                               int M_max, std::vector<int>* tried) {
    std::optional<int> found;
    for (int kappa : {1, 2, -1, -2}) {
        if (tried) tried->push_back(kappa);
        const FormalSeries ex = expand_closed_form(C, a, kappa, M_max);
        bool all = true;
        for (const auto& s : series)
            for (int m = 0; m < M_max && all; ++m)
                if (s[m] != ex[m]) all = false;
        if (all) {
            if (found) return std::nullopt;  // ambiguous
            found = kappa;
        }
    }
    return found;
}

ClosedFormReport compare_with_closed_form(const LocalRing& R, const CharacterSpec& mu, long y_prime, long y,
                                          int M_max, const ShellOptions& opt) {
    ClosedFormReport rep;
    rep.flat_section = "K_circ-flat: f_{y',s} restricted to K_circ equals f_{y'} for every s";
    if (R.ramified()) {
        rep.note = "hypothesis violated: E must be unramified";
        return rep;
    }
    if (mu.lambda_residue.order(R) == 1) {
        rep.note = "hypothesis violated: chi is trivial";
        return rep;
    }
    rep.hypotheses_ok = true;
    const long p = R.p();
    const ExactNumber chi_minus_one = eval_character(mu.lambda_residue, R.xi());  // xi / conj(xi) = -1
    rep.constant = chi_minus_one * ExactNumber(Rational(p - 1, p * p));
    rep.mu_gamma = mu_gamma(mu, R, 1);
    const ExactNumber d = rep.mu_gamma * rep.mu_gamma.conj() - ExactNumber(1);
    rep.ratio_off_unit_circle = !d.is_zero() && (d.totally_nonnegative() || (-d).totally_nonnegative());
    const IntertwiningCoefficients co = intertwining_coefficients(R, mu, y_prime, y, M_max, opt);
    std::vector<ExactNumber> head(co.series.coeffs().begin(), co.series.coeffs().begin() + M_max);
    rep.computed = FormalSeries(M_max, head);
    rep.kappa = match_kappa({rep.computed}, rep.constant, rep.mu_gamma, M_max, &rep.kappas_tried);
    // delta^{s/2}(gamma) = |p^{-1}|_E^{s} = t^{-1}, so mu_s(gamma) = mu(gamma) t^{-1}.
    const int shown = rep.kappa.value_or(-1);
    rep.expected = expand_closed_form(rep.constant, rep.mu_gamma, shown, M_max);
    for (int m = 0; m < M_max; ++m) rep.coefficient_match.push_back(rep.computed[m] == rep.expected[m]);
    rep.note = rep.kappa ? "closed form matched with kappa = " + std::to_string(*rep.kappa)
                         : "no kappa in {1, 2, -1, -2} matches; comparison shown for kappa = -1 from delta^{s/2}(gamma) = t^{-1}";
    return rep;
}

Rational gamma_shell_measure(const LocalRing& R, int m) {
    if (m < 0) throw InvalidInput("shell index must be nonnegative");
    // vol{v(b) >= -m, v(z) >= -2m}: b in p^{-m} O, and z - N(b) h = s in p^{-2m} Z_p.
    auto vol = [&](int k) -> Rational {
        if (k < 0) return 0;
        return Rational(R.pow_p(2 * k)) * Rational(R.pow_p(2 * k));
    };
    return vol(m) - vol(m - 1);
}

Rational exponent_shell_measure(const LocalRing& R, int m, const ShellOptions& opt) {
    if (m < 0) throw InvalidInput("shell index must be nonnegative");
    const CharacterSpec mu = CharacterSpec::inert_tame(R, (R.p() + 1) / 2);
    const Accumulator acc = integrate(R, mu, 0, 0, m, opt, std::nullopt, true);
    return acc.measure[static_cast<std::size_t>(m)];
}

}  // namespace u3
