#pragma once
// U(3) for the pairing <x,y> = conj(x1) y3 + xi conj(x2) y2 - conj(x3) y1, at truncated precision.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "u3/exactnum.hpp"
#include "u3/localring.hpp"

namespace u3 {

/// 3x3 matrix over a truncated local ring.
class UMat {
public:
    UMat() = default;
    explicit UMat(const LocalRing* R);  // zero matrix
    static UMat identity(const LocalRing* R);
    static UMat diag(const LocalElement& a, const LocalElement& b, const LocalElement& c);
    /// Anti-diagonal matrix with entries (1,3)=a, (2,2)=b, (3,1)=c.
    static UMat antidiag(const LocalElement& a, const LocalElement& b, const LocalElement& c);

    const LocalRing* ring() const { return R_; }
    LocalElement& operator()(int i, int j) { return e_[static_cast<std::size_t>(3 * i + j)]; }
    const LocalElement& operator()(int i, int j) const { return e_[static_cast<std::size_t>(3 * i + j)]; }

    UMat operator*(const UMat& o) const;
    UMat conj_transpose() const;
    /// General inverse via the adjugate.
    UMat inverse() const;
    LocalElement det() const;
    int min_prec() const;
    std::string to_string() const;

private:
    const LocalRing* R_ = nullptr;
    std::array<LocalElement, 9> e_;
};

/// Elements of G are unitary matrices; they are validated, not constrained by construction.
using UGroupElement = UMat;

UMat form_matrix(const LocalRing* R);
/// conj-transpose(g) J g == J at the available precision.
bool is_unitary(const UMat& g);
/// Throws InvalidInput unless g preserves the pairing and has a norm-one unit determinant.
void validate_unitary(const UMat& g);
/// g^{-1} = J^{-1} g* J for g in G.
UMat unitary_inverse(const UMat& g);

// Root subgroups and torus, in the coordinates used throughout.
/// [[1, xi conj(b), s + N(b) h], [0, 1, b], [0, 0, 1]] with s in Q_p and h - conj(h) = xi.
UMat upper_unipotent(const LocalElement& b, const LocalElement& s);
/// [[1, 0, 0], [d, 1, 0], [s - N(d) h, c, 1]] with d = conj(c)/xi.
UMat lower_unipotent(const LocalElement& c, const LocalElement& s);
/// diag(conj(alpha), beta, alpha^{-1}).
UMat torus(const LocalElement& alpha, const LocalElement& beta);

// Special elements.
/// gamma^n, gamma = diag(varpi^{-1}, 1, varpi) (ramified: diag(-xi^{-1}, 1, xi)).
UMat gamma_pow(const LocalRing* R, int n);
/// gamma^{-n} g gamma^{n}.
UMat conj_by_gamma(const UMat& g, int n);
/// diag(conj(u), 1, u^{-1}) for the fixed non-square unit u.
UMat eta(const LocalRing* R);
/// antidiag(1, 1, -1): the Weyl element used by the intertwining operator.
UMat weyl_w(const LocalRing* R);
/// antidiag(xi, 1, xi^{-1}) in K_circ.
UMat weyl_circ(const LocalRing* R);
/// antidiag(a, 1, -1/conj(a)) in K_prime, a = p^{-1} (unramified) or 1 (ramified).
UMat weyl_prime(const LocalRing* R);
/// Representatives sigma_y of the double cosets B \ G / K_T in the present coordinates (unramified).
UMat sigma_y(const LocalRing* R, long y);
UMat zero_one_rep(const LocalRing* R);

enum class SubgroupKind { K_circ, K_prime, Iwahori, I_r, I_21, K_T, K_paramodular, K_gross, I_gross, K_gross_j };

struct Subgroup {
    SubgroupKind kind = SubgroupKind::K_circ;
    int param = 0;
    std::string name() const;
    static Subgroup parse(const std::string& s);
};

/// Entry-wise membership. Throws PrecisionLoss when undecidable at the known precision.
bool membership(const UMat& g, const Subgroup& S);
/// Reduction of k in K_circ (ramified) to O3(F_p) and its sign character.
int gross_sign(const UMat& k);

// Lattices are stored by a basis given as matrix columns.
struct HermitianLattice {
    UMat basis;
};
enum class VertexType { self_dual, almost_self_dual, neither };
const char* to_string(VertexType v);
HermitianLattice lattice_dual(const HermitianLattice& L);
/// L1 is contained in L2.
bool lattice_contains(const HermitianLattice& L2, const HermitianLattice& L1);
bool lattice_equal(const HermitianLattice& a, const HermitianLattice& b);
HermitianLattice lattice_scale(const HermitianLattice& L, int varpi_power);
HermitianLattice standard_lattice_circ(const LocalRing* R);
HermitianLattice standard_lattice_prime(const LocalRing* R);
VertexType classify_vertex(const HermitianLattice& L);

struct IwasawaResult {
    int m = 0;
    UMat b;  // upper triangular, b(2,2) = varpi^m (xi^m when ramified)
    UMat k;  // in K
};
/// g = gamma^m * n * t * k with n t = b gamma^{-m} upper triangular and k in K (K_circ or K_prime).
IwasawaResult iwasawa_decompose(const UMat& g, const Subgroup& K);
/// n with g in K_circ gamma^n K_circ.
int cartan_exponent(const UMat& g);

/// Representatives of K / I for K in {K_circ, K_prime, K_gross} (for K_gross: of K'' / I'').
std::vector<UMat> coset_reps(const LocalRing* R, const Subgroup& K);
/// Number of Iwahori cosets in K_circ, checked pairwise distinct.
long valence(const LocalRing* R);

// Enumeration by Iwahori coordinates k = rep * n^-(c, s^-) * t(alpha, beta) * n(b, s).
struct EnumDepths {
    int lower_c = 1;   // digits of c beyond its first possible one
    int lower_s = 1;
    int torus = 1;     // 0 omits the torus factor
    int upper = 1;     // 0 omits the upper unipotent factor
};

struct EnumOptions {
    EnumDepths depths;
    long budget = 1000000000L;
    int threads = 1;
    /// Extra digits allowed when a cell's value is not determined by its known digits.
    int max_refine = 8;
};

/// Value of an integrand on a cell; throws PrecisionLoss when the cell is too coarse.
/// Returns std::nullopt for cells outside the region of interest.
using CellValue = std::function<std::optional<ExactNumber>(const UMat&)>;

struct Histogram {
    std::vector<std::pair<ExactNumber, Rational>> bins;  // value -> measure
    Rational mass = 0;  // measure of the accepted region, relative to the ambient
    long cells = 0;
    ExactNumber total() const;  // sum of value * measure
    void add(const ExactNumber& v, const Rational& w);
    void merge(const Histogram& o);
};

/// Ambient measure (total 1) on the subgroup generated by coset_reps(K) and I; membership of S
/// is applied as a filter. Returns the histogram of f restricted to S with ambient-relative weights.
Histogram integrate_cells(const LocalRing* R, const Subgroup& S, const EnumOptions& opt, const CellValue& f);
/// Estimated number of cells before refinement.
long estimate_cells(const LocalRing* R, const Subgroup& S, const EnumDepths& d);

struct CellRecord {
    UMat g;
    Rational measure;  // vol(cell) / vol(S)
};
/// Streams the cells of S (at the given depths) with measures normalized to sum to 1.
std::vector<CellRecord> enumerate_subgroup(const LocalRing* R, const Subgroup& S, const EnumOptions& opt);

/// [S : S cap gamma^n K gamma^{-n}] with K the maximal compact containing S, by exact cell counting.
Rational conjugation_index(const LocalRing* R, const Subgroup& S, int n, const EnumOptions& opt);

struct MonteCarloResult {
    ExactNumber mean;
    Rational variance_of_mean = 0;  // meaningful only when all values are rational
    bool rational_values = true;
    long samples = 0;
};
MonteCarloResult sample_cells(const LocalRing* R, const Subgroup& S, const EnumDepths& d, long samples,
                              unsigned long seed, const CellValue& f, int max_refine = 12);

}  // namespace u3
