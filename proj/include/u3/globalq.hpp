#pragma once
// Irregularity lower bounds of the Gross-level Picard modular surfaces at an inert prime l,
// assembled from class numbers, root numbers and the local invariant dimensions.

#include <string>
#include <vector>

#include "u3/quadfield.hpp"

namespace u3 {

struct IrregularityReport {
    long D = 0;
    long l = 0;
    int r = 0;
    long h = 0;
    int W_cube = 0;
    /// tame characters of F_{l^2}^1 that switch the root number (D = 7 mod 8 only)
    long n_switching_characters = 0;
    /// root number after twisting by one of the counted characters
    int twisted_W = 0;
    long q_lower_bound = 0;
    bool exact = false;
    /// the W = -1 side of the sum is never evaluated
    std::string unevaluated_term = "+ (unknown >= 0)";
    std::vector<std::string> notes;
};

enum class BLKind { holds_at_level, holds_unconditionally, not_covered };
const char* to_string(BLKind k);

struct BLStatus {
    BLKind kind = BLKind::not_covered;
    long l = 0;
    int level_exponent = 0;  // level l^e when kind == holds_at_level
    std::string detail;
    std::string to_string() const;
};

/// Throws NotFundamental for bad D, NotInert unless l is inert in Q(sqrt(-D)), InvalidInput for r < 0.
IrregularityReport irregularity_lower_bound(long D, long l, int r);
BLStatus bombieri_lang_status(long D, long l);
/// One row per valid D in [D_lo, D_hi] and prime l in ls that is inert, ordered by (D, l).
std::vector<IrregularityReport> emit_table(long D_lo, long D_hi, const std::vector<long>& ls, int r);

}  // namespace u3
