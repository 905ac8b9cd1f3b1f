// One PASS/FAIL line per acceptance criterion; the exit status is nonzero if any criterion fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>

#include "suites.hpp"
#include "u3/errors.hpp"
#include "u3/globalq.hpp"
#include "u3/quadfield.hpp"

using namespace u3;
using suites::Report;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Collapses a suite report into one outcome, naming the failing assertions.
Outcome from_reports(const std::vector<Report>& reps) {
    Outcome o{true, ""};
    long n = 0;
    for (const auto& r : reps)
        for (const auto& a : r.assertions) {
            ++n;
            if (!a.pass) {
                o.pass = false;
                o.detail += (o.detail.empty() ? "" : "; ") + a.name + ": expected " + a.expected.dump() + ", got " +
                            a.actual.dump();
            }
        }
    if (o.pass) o.detail = std::to_string(n) + " assertions";
    return o;
}

Outcome c1() {
    Report r = suites::classnum({7, 11, 23, 31, 47, 71});
    const std::vector<long> h{1, 1, 3, 3, 5, 7};
    for (std::size_t i = 0; i < h.size(); ++i)
        r.check_eq("h(-" + r.rows[i]["D"].dump() + ")", "", h[i], r.rows[i]["h_forms"]);
    return from_reports({r});
}

std::vector<long> valid_below(long n) {
    std::vector<long> out;
    for (long D = 4; D < n; ++D)
        if (is_valid_discriminant(D)) out.push_back(D);
    return out;
}

Outcome c2() { return from_reports({suites::rootnum(valid_below(2000))}); }
Outcome c3() { return from_reports({suites::tame_characters(500)}); }
Outcome c4() { return from_reports({suites::finite_adjoint({3, 5, 7}, 500)}); }

Outcome c5() {
    std::vector<Report> reps;
    for (long p : {3L, 5L}) {
        suites::LocalConfig c;
        c.p = p;
        c.N = 2;
        reps.push_back(suites::double_cosets(c));
    }
    return from_reports(reps);
}

Outcome c6() {
    const auto R = LocalRing::make(3, RingKind::unramified, 14);
    const Subgroup kPrime{SubgroupKind::K_prime, 0};
    const auto l0 = CharacterSpec::unramified_lambda0();
    Report r;
    PhiOptions push, exact;
    push.enumeration.depths = {1, 1, 0, 0};
    exact.enumeration.depths = {1, 1, 1, 1};
    const auto e1 = phi_sequence(*R, kPrime, l0, 1, PhiMode::exact, exact);
    const auto p1 = phi_sequence(*R, kPrime, l0, 1, PhiMode::pushforward, push);
    r.check_eq("(a) exact = pushforward at n = 1", "", e1.average.to_string(), p1.average.to_string());
    const auto p2 = phi_sequence(*R, kPrime, l0, 2, PhiMode::pushforward, push);
    r.check_eq("(b) p Phi_1 = p^2 Phi_2", "", (ExactNumber(3) * p1.phi).to_string(), (ExactNumber(9) * p2.phi).to_string());
    const Rational c0 = measure_c0(*R);
    const ExactNumber closed = ExactNumber(Rational(1, 729)) * ExactNumber(Rational(1) + c0);
    r.check_eq("(c) average = p^-6 (1 + c0) with c0 = " + c0.get_str(), "", closed.to_string(), p1.average.to_string());
    r.check_eq("(d) Gamma_mu = 0", "", "0", macdonald_gamma(*R, l0).to_string());
    return from_reports({r});
}

Outcome c7() {
    suites::LocalConfig c;
    c.p = 3;
    c.n = 1;
    return from_reports({suites::ramified_strata(c)});
}

Outcome c8() {
    suites::LocalConfig c;
    c.p = 3;
    c.mmax = 4;
    return from_reports({suites::intertwine(c)});
}

Outcome c9() {
    suites::LocalConfig c;
    c.p = 3;
    c.rmax = 2;
    return from_reports({suites::rank_growth(c)});
}

Outcome c10() {
    Report r;
    const auto a = irregularity_lower_bound(11, 7, 0);
    r.check("(11,7,0) -> 1 exact", "", "1 exact", std::to_string(a.q_lower_bound) + (a.exact ? " exact" : ""),
            a.q_lower_bound == 1 && a.exact);
    r.check_eq("(11,7,4) -> >= 3", "", 3, irregularity_lower_bound(11, 7, 4).q_lower_bound);
    r.check_eq("(23,7,3) -> >= 9", "", 9, irregularity_lower_bound(23, 7, 3).q_lower_bound);
    r.check_eq("(23,5) -> excluded", "", "not_covered", to_string(bombieri_lang_status(23, 5).kind));
    const auto d83 = validate_discriminant(83);
    r.check_eq("h(-83) = 3 by both methods", "", 3 * 3, class_number_forms(d83) * class_number_dirichlet(d83));
    r.check_eq("D = 83 -> holds_unconditionally", "", "holds_unconditionally", to_string(bombieri_lang_status(83, 5).kind));
    return from_reports({r});
}

Outcome c11() {
    Outcome o{true, ""};
    auto run = [](int threads) {
        std::vector<std::string> out;
        suites::LocalConfig c;
        c.threads = threads;
        c.n = 2;
        out.push_back(suites::phi_sequence(c).to_json().dump());
        c.n = 1;
        out.push_back(suites::ramified_strata(c).to_json().dump());
        c.mmax = 3;
        out.push_back(suites::intertwine(c).to_json().dump());
        return out;
    };
    const auto a = run(1), b = run(8);
    const char* names[] = {"phi-sequence", "ramified-strata", "intertwine"};
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) {
            o.pass = false;
            o.detail += std::string(o.detail.empty() ? "" : "; ") + names[i] + " differs";
        }
    if (o.pass) o.detail = "phi-sequence, ramified-strata and intertwine JSON identical at 1 and 8 threads";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"class numbers by forms and by the Dirichlet sum", c1},
        {"root number W(lambda_c^3) = +1 iff D = 3 mod 8, D < 2000", c2},
        {"sign-switching tame characters, l < 500", c3},
        {"finite reductive layer at p = 3, 5, 7", c4},
        {"double cosets and K_T-invariant dimensions, p = 3, 5", c5},
        {"unramified matrix coefficient sequence, p = 3", c6},
        {"ramified strata, p = 3, n = 1", c7},
        {"intertwining series, p = 3, chi of order 4", c8},
        {"rank growth of gamma-translates, p = 3", c9},
        {"global assembly of irregularity bounds", c10},
        {"determinism across thread counts", c11},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ostringstream line;
        line.setf(std::ios::fixed);
        line.precision(1);
        line << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " [" << secs << " s] "
             << o.detail;
        std::cout << line.str() << std::endl;
        if (!o.pass) ++failed;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria pass" << std::endl;
    return failed ? 1 : 0;
}
