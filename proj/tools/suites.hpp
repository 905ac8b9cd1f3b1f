#pragma once
// Verification suites shared by the command-line tool and the acceptance runner.

#include <string>
#include <vector>

#include "json.hpp"
#include "u3/repinv.hpp"

namespace u3::suites {

using json = nlohmann::json;

struct Assertion {
    std::string name;
    std::string citation;
    json expected;
    json actual;
    bool pass = false;
};

struct Report {
    std::string command;
    json config = json::object();
    json rows = json::array();
    std::vector<Assertion> assertions;

    void check(std::string name, std::string citation, json expected, json actual, bool pass);
    void check_eq(std::string name, std::string citation, const json& expected, const json& actual);
    bool all_pass() const;
    json to_json() const;
    std::string to_tsv() const;
};

struct LocalConfig {
    long p = 3;
    int n = 1;
    int N = 2;
    int mmax = 4;
    int rmax = 2;
    PhiMode mode = PhiMode::pushforward;
    long budget = 1000000000L;
    unsigned long seed = 1;
    long samples = 2000;
    int threads = 1;
};

json config_json(const LocalConfig& c);

Report classnum(const std::vector<long>& Ds);
Report rootnum(const std::vector<long>& Ds);
Report splitting_table(const std::vector<long>& Ds, const std::vector<long>& primes);
Report tame_characters(long l_max);
Report finite_adjoint(const std::vector<long>& ps, long D_max);
Report double_cosets(const LocalConfig& c);
/// K' at level n in the configured mode; asserts p^n Phi_n = p Phi_1.
Report phi_sequence(const LocalConfig& c);
Report ramified_strata(const LocalConfig& c);
Report intertwine(const LocalConfig& c);
Report rank_growth(const LocalConfig& c);
Report irregularity(long D, long l, int r);
Report table(long D_lo, long D_hi, const std::vector<long>& ls, int r);

/// Names accepted by verify-local.
const std::vector<std::string>& local_suite_names();
Report run_local(const std::string& suite, const LocalConfig& c);

}  // namespace u3::suites
