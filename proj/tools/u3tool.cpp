// Command-line front end: class numbers, root numbers, local verification suites and irregularity tables.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "suites.hpp"
#include "u3/errors.hpp"
#include "u3/quadfield.hpp"

using namespace u3;
using suites::Report;

namespace {

// "7..47" or "7,11,23" or "23"
std::vector<long> parse_list(const std::string& s, bool discriminants) {
    std::vector<long> out;
    const auto dots = s.find("..");
    try {
        if (dots != std::string::npos) {
            const long lo = std::stol(s.substr(0, dots)), hi = std::stol(s.substr(dots + 2));
            for (long x = lo; x <= hi; ++x)
                if (!discriminants || is_valid_discriminant(x)) out.push_back(x);
            return out;
        }
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(std::stol(item));
    } catch (const std::logic_error&) {
        throw InvalidInput("cannot parse list '" + s + "'");
    }
    return out;
}

std::pair<long, long> parse_range(const std::string& s) {
    const auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            const long v = std::stol(s);
            return {v, v};
        }
        return {std::stol(s.substr(0, dots)), std::stol(s.substr(dots + 2))};
    } catch (const std::logic_error&) {
        throw InvalidInput("cannot parse range '" + s + "'");
    }
}

long parse_long(const std::string& s) {
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used == s.size()) return v;
    } catch (const std::logic_error&) {
    }
    throw InvalidInput("not an integer: '" + s + "'");
}

PhiMode parse_mode(const std::string& m) {
    if (m == "exact") return PhiMode::exact;
    if (m == "pushforward") return PhiMode::pushforward;
    if (m == "montecarlo") return PhiMode::montecarlo;
    throw InvalidInput("mode must be exact, pushforward or montecarlo");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact local and global computations for Picard modular surfaces"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string format = "json", output;
    int threads = 1;
    app.add_option("--format", format, "json or tsv")->check(CLI::IsMember({"json", "tsv"}));
    app.add_option("--output", output, "write the report to a file");
    app.add_option("--threads", threads, "worker threads (TOOLKIT_THREADS overrides)")->check(CLI::PositiveNumber);

    std::string D_arg, l_arg, p_arg;
    long r_arg = 0;

    auto* classnum = app.add_subcommand("classnum", "class number by reduced forms and by the Dirichlet sum");
    classnum->add_option("D", D_arg, "D, D1,D2,... or lo..hi")->required();

    auto* rootnum = app.add_subcommand("rootnum", "root number W(lambda_c^3) = (-2/D)");
    rootnum->add_option("D", D_arg, "D, D1,D2,... or lo..hi")->required();

    auto* split = app.add_subcommand("splitting", "splitting type of primes in Q(sqrt(-D))");
    split->add_option("--D", D_arg)->required();
    split->add_option("--p", p_arg, "p or p1,p2,...")->required();

    suites::LocalConfig lc;
    std::string suite, mode = "pushforward";
    bool seed_given = false;
    auto* verify = app.add_subcommand("verify-local", "run a local verification suite");
    verify->add_option("suite", suite)->required()->check(CLI::IsMember(suites::local_suite_names()));
    verify->add_option("--p", lc.p)->check(CLI::PositiveNumber);
    verify->add_option("--n", lc.n);
    verify->add_option("--N", lc.N);
    verify->add_option("--mmax", lc.mmax);
    verify->add_option("--rmax", lc.rmax);
    verify->add_option("--mode", mode);
    verify->add_option("--budget", lc.budget)->check(CLI::PositiveNumber);
    verify->add_option("--samples", lc.samples)->check(CLI::PositiveNumber);
    auto* seed_opt = verify->add_option("--seed", lc.seed);

    auto* irr = app.add_subcommand("irregularity", "lower bound for the irregularity at level l^r");
    irr->add_option("--D", D_arg)->required();
    irr->add_option("--l", l_arg)->required();
    irr->add_option("--r", r_arg)->required();

    auto* tab = app.add_subcommand("table", "irregularity bounds over ranges of D and l");
    tab->add_option("--D", D_arg, "lo..hi")->required();
    tab->add_option("--l", l_arg, "l1,l2,...")->required();
    tab->add_option("--r", r_arg)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (const char* env = std::getenv("TOOLKIT_THREADS")) {
        try {
            threads = std::max(1, std::stoi(env));
        } catch (const std::logic_error&) {
            std::cerr << "error: TOOLKIT_THREADS must be a positive integer\n";
            return 2;
        }
    }
    seed_given = seed_opt->count() > 0;

    try {
        Report rep;
        if (*classnum) {
            rep = suites::classnum(parse_list(D_arg, D_arg.find("..") != std::string::npos));
        } else if (*rootnum) {
            rep = suites::rootnum(parse_list(D_arg, D_arg.find("..") != std::string::npos));
        } else if (*split) {
            rep = suites::splitting_table(parse_list(D_arg, D_arg.find("..") != std::string::npos), parse_list(p_arg, false));
        } else if (*verify) {
            lc.mode = parse_mode(mode);
            if (lc.mode == PhiMode::montecarlo && !seed_given) throw InvalidInput("montecarlo mode requires --seed");
            lc.threads = threads;
            rep = suites::run_local(suite, lc);
        } else if (*irr) {
            rep = suites::irregularity(parse_long(D_arg), parse_long(l_arg), static_cast<int>(r_arg));
        } else if (*tab) {
            const auto [lo, hi] = parse_range(D_arg);
            rep = suites::table(lo, hi, parse_list(l_arg, false), static_cast<int>(r_arg));
        }
        const std::string text = format == "json" ? rep.to_json().dump(2) + "\n" : rep.to_tsv();
        if (output.empty()) {
            std::cout << text;
        } else {
            std::ofstream f(output);
            if (!f) throw InvalidInput("cannot write " + output);
            f << text;
        }
        return rep.all_pass() ? 0 : 1;
    } catch (const BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return 3;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
