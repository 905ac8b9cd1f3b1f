#pragma once

#include <optional>
#include <string>
#include <vector>

#include "u3/exactnum.hpp"
#include "u3/localring.hpp"
#include "u3/unitary.hpp"

namespace u3 {

/// Principal-series datum mu(diag(conj(a), b, a^{-1})) = lambda(conj a) nu(b) |a|^{1/2}
/// (|a|^{-1/2} when use_w is set).
struct CharacterSpec {
    ExactNumber lambda_on_uniformizer = ExactNumber(-1);
    ResidueCharacter lambda_residue{CharTarget::Fp2_star, 0};
    ResidueCharacter nu_residue{CharTarget::Fp2_one, 0};
    bool use_w = false;

    CharacterSpec w() const;
    std::string describe() const;

    /// Unramified quadratic lambda_0 with trivial nu.
    static CharacterSpec unramified_lambda0();
    /// Unramified E: lambda(p) = -1 and lambda(z) = chi(z / conj z) on units, where chi sends the
    /// generator of the norm-one residues to zeta_{p+1}^k; nu is the inverse restriction of lambda to E^1.
    static CharacterSpec inert_tame(const LocalRing& R, long k);
    /// Ramified E: the tamely ramified conjugate-symplectic lambda with lambda(xi) = sign * sqrt(lambda(-1)).
    static CharacterSpec ramified_symplectic(const LocalRing& R, int sign);
};

enum class PacketMember { pi_n, pi_2, pi_c };
const char* to_string(PacketMember m);

/// mu(t) for a diagonal element of G (no modulus factor).
ExactNumber mu_torus(const CharacterSpec& mu, const UMat& t);
/// (mu delta^{1/2})(b) for an upper triangular element of G.
ExactNumber mu_delta_half(const CharacterSpec& mu, const UMat& b);
/// mu(gamma^n).
ExactNumber mu_gamma(const CharacterSpec& mu, const LocalRing& R, int n);

/// The K-invariant vector normalized by f_K = 1 on K (K in K_circ, K_prime, K_gross).
ExactNumber eval_f_K(const UMat& g, const Subgroup& K, const CharacterSpec& mu);

/// Isotropic lines mod varpi^N with the orbits of K acting on the right.
struct DoubleCosetResult {
    long n_lines = 0;
    std::vector<UMat> reps;
    std::vector<std::string> labels;
    std::vector<long> orbit_sizes;
};

DoubleCosetResult double_cosets(const LocalRing& R, const Subgroup& K, int N);

struct InvariantCount {
    Subgroup subgroup;
    long total_dim = 0;
    long n_cosets = 0;
    std::vector<std::string> supported_cosets;
};

/// Requires K to contain the first principal congruence subgroup of K_circ.
InvariantCount invariant_dimension(const LocalRing& R, const Subgroup& K, const CharacterSpec& mu, int N);

enum class PhiMode { exact, pushforward, montecarlo };
const char* to_string(PhiMode m);

struct PhiOptions {
    EnumOptions enumeration;
    long samples = 2000;
    unsigned long seed = 1;
};

struct PhiResult {
    /// (1/vol K) * integral over K of f_K(gamma^{-n} k gamma^n).
    ExactNumber average;
    /// p^{5n} * average.
    ExactNumber phi;
    PhiMode mode = PhiMode::exact;
    long cells = 0;
    std::optional<Rational> variance_of_mean;
};

PhiResult phi_sequence(const LocalRing& R, const Subgroup& K, const CharacterSpec& mu, int n, PhiMode mode,
                       const PhiOptions& opt = {});

/// Unramified: [K':K'_j] with K'_j = {k : v(k_31) >= j+1}. Ramified: [I'':K''_j].
Rational volume_strata(const LocalRing& R, const Subgroup& K, int j, const EnumOptions& opt = {});
/// [K':I] / [K' cap N : I cap N], measured by counting.
Rational measure_c0(const LocalRing& R);

/// Product of the two root factors; throws PoleInGamma on a vanishing denominator.
ExactNumber macdonald_gamma(const LocalRing& R, const CharacterSpec& nu);

struct RankResult {
    long rank = 0;
    long points = 0;
    /// invariant[j] is false when gamma^j . f_K moved under a generator of I_{2r} at some point.
    std::vector<bool> invariant;
};

RankResult gamma_translate_rank(const LocalRing& R, const Subgroup& K, const CharacterSpec& mu, int r, int N);

/// The two strata integrals for ramified E, normalized by vol(I'') = 1.
struct StrataReport {
    ExactNumber inner;       // over K''_{2n}
    ExactNumber complement;  // over K'' minus K''_{2n}
    Rational index_K_I;      // [K'':I''] measured
    bool inner_matches = false;
    bool complement_bounded = false;
};

StrataReport ramified_strata(const LocalRing& R, const CharacterSpec& mu, int n, const EnumOptions& opt = {});

}  // namespace u3
