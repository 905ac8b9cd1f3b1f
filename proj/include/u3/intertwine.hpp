#pragma once
// The intertwining operator M_s on the K_T-invariant sections f_{y'} for unramified E,
// expanded as a power series in t = q_E^{-s}.

#include <optional>
#include <string>
#include <vector>

#include "u3/exactnum.hpp"
#include "u3/localring.hpp"
#include "u3/repinv.hpp"
#include "u3/unitary.hpp"

namespace u3 {

struct ShellOptions {
    long budget = 20000000L;
    int threads = 1;
    /// Extra digits a cell may gain before PrecisionLoss is propagated.
    int max_refine = 16;
};

/// Coefficients c_m of M_s(f_{y',s})(sigma_y k) = sum_m c_m t^m, for m up to the truncation shell.
struct IntertwiningCoefficients {
    long y_prime = 0;
    long y = 0;
    FormalSeries series{1};
    /// measure of {n : exponent m} met while integrating; sums to the truncated region measure
    std::vector<Rational> shell_measures;
    long cells = 0;
};

/// n(b, s) enumerated over v(b) >= -ceil(T/2), v(s) >= -T with T = M_max + 2, cells refined until
/// the integrand is determined. The section is K_circ-flat: f_{y',s}(b k) = (mu_s delta^{1/2})(b) f_{y'}(k).
IntertwiningCoefficients intertwining_coefficients(const LocalRing& R, const CharacterSpec& mu, long y_prime, long y,
                                                   int M_max, const ShellOptions& opt = {},
                                                   const std::optional<UMat>& right_translate = std::nullopt);

/// The m-th coefficient alone.
ExactNumber shell_integral(const LocalRing& R, const CharacterSpec& mu, long y_prime, long y, int m,
                           const ShellOptions& opt = {});

/// Coefficients of C (1 - a t^kappa)^{-1} below t^{M_max}, expanded around t = 0
/// (for kappa < 0 via (1 - a t^{-k})^{-1} = -a^{-1} t^k (1 - a^{-1} t^k)^{-1}).
FormalSeries expand_closed_form(const ExactNumber& C, const ExactNumber& a, int kappa, int M_max);

struct ClosedFormReport {
    bool hypotheses_ok = false;
    std::string note;
    ExactNumber constant;    // chi(-1) p^{-1} (1 - p^{-1})
    ExactNumber mu_gamma;    // mu(gamma)
    std::optional<int> kappa;
    std::vector<int> kappas_tried;
    FormalSeries computed{1};
    FormalSeries expected{1};
    std::vector<bool> coefficient_match;
    bool ratio_off_unit_circle = false;
    std::string flat_section;
};

/// Finds the kappa in {1, 2, -1, -2} (if any) under which every series matches the closed form for
/// m < M_max. With several series, kappa must work for all of them simultaneously.
std::optional<int> match_kappa(const std::vector<FormalSeries>& series, const ExactNumber& C, const ExactNumber& a,
                               int M_max, std::vector<int>* tried = nullptr);

ClosedFormReport compare_with_closed_form(const LocalRing& R, const CharacterSpec& mu, long y_prime, long y,
                                          int M_max, const ShellOptions& opt = {});

/// vol{n(b, s) : v(b) >= -m, v(z) >= -2m} minus the same set at m - 1 (the gamma-conjugation
/// filtration), in closed form p^{4m} - p^{4(m-1)}.
Rational gamma_shell_measure(const LocalRing& R, int m);
/// vol{n : exponent = m}, the shells carrying c_m, counted on cells.
Rational exponent_shell_measure(const LocalRing& R, int m, const ShellOptions& opt = {});

}  // namespace u3
