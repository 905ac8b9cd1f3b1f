#include "u3/globalq.hpp"

#include <algorithm>

#include "u3/errors.hpp"

namespace u3 {

const char* to_string(BLKind k) {
    switch (k) {
        case BLKind::holds_at_level: return "holds_at_level";
        case BLKind::holds_unconditionally: return "holds_unconditionally";
        case BLKind::not_covered: return "not_covered";
    }
    return "?";
}

std::string BLStatus::to_string() const {
    switch (kind) {
        case BLKind::holds_at_level:
            return "holds_at_level(" + std::to_string(l) + "^" + std::to_string(level_exponent) + ")";
        case BLKind::holds_unconditionally: return "holds_unconditionally";
        case BLKind::not_covered: return "not_covered(" + detail + ")";
    }
    return "?";
}

IrregularityReport irregularity_lower_bound(long D, long l, int r) {
    const FundamentalDiscriminant d = validate_discriminant(D);
    if (r < 0) throw InvalidInput("r must be nonnegative");
    if (!is_prime(l)) throw InvalidInput("l must be prime");
    if (splitting(d, l) != SplittingType::inert)
        throw NotInert(std::to_string(l) + " is " + to_string(splitting(d, l)) + " in Q(sqrt(-" + std::to_string(D) + "))");

    IrregularityReport rep;
    rep.D = D;
    rep.l = l;
    rep.r = r;
    rep.h = class_number_forms(d);
    rep.W_cube = canonical_cube_root_number(d);
    rep.notes.push_back("h = " + std::to_string(rep.h) + " (reduced forms, agrees with the Dirichlet sum)");
    rep.notes.push_back("W(lambda_c^3) = (-2/D) = " + std::to_string(rep.W_cube));

    if (D % 8 == 3) {
        // chi = 1; pi_n contributes dim pi_n^{I_r}, at least floor(r/2) + 1 and exactly 1 for r <= 1
        rep.twisted_W = twisted_root_number(rep.W_cube, 0, 1);
        rep.q_lower_bound = rep.h * (r / 2 + 1);
        rep.exact = r <= 1;
        rep.notes.push_back("chi trivial: W(lambda_c^3 chi^3) = " + std::to_string(rep.twisted_W));
        rep.notes.push_back(rep.exact ? "I_r-invariants of pi_n form a line for r <= 1"
                                      : "dim pi_n^{I_2k} >= k + 1 with k = floor(r/2)");
        if (l == 2) rep.notes.push_back("l = 2 is inert here and E_2 is unramified, so the unramified local results apply");
    } else {
        // W(lambda_c^3) = -1: a tame chi with chi^3 != 1 and chi(-1) = 1 flips it; each has a K_T-line inside I_3
        rep.twisted_W = twisted_root_number(rep.W_cube, 1, 1);
        rep.n_switching_characters = count_sign_switching_tame_characters(l);
        rep.q_lower_bound = r >= 3 ? rep.h * rep.n_switching_characters : 0;
        rep.notes.push_back("tame chi with chi^3 != 1, chi(-1) = 1: " + std::to_string(rep.n_switching_characters) +
                            " characters, each giving W(lambda_c^3 chi^3) = " + std::to_string(rep.twisted_W));
        rep.notes.push_back(r >= 3 ? "each pi_n has a K_T-fixed line, and K_T contains a conjugate of I_3"
                                   : "no bound below level l^3: K_T only contains a conjugate of I_3");
        if (l == 3)
            rep.notes.push_back("l = 3: level 3^3 gives q >= h; the Bombieri-Lang level is 3^7; nothing is claimed in between");
    }
    return rep;
}

BLStatus bombieri_lang_status(long D, long l) {
    const FundamentalDiscriminant d = validate_discriminant(D);
    BLStatus st;
    st.l = l;
    if (!is_prime(l)) throw InvalidInput("l must be prime");
    const SplittingType sp = splitting(d, l);
    if (sp != SplittingType::inert) {
        st.detail = std::string("l is ") + to_string(sp);
        return st;
    }
    if (D % 8 == 3) {
        if (class_number_forms(d) >= 3) {
            st.kind = BLKind::holds_unconditionally;
            st.detail = "q >= h >= 3 already at level K''";
            return st;
        }
        st.kind = BLKind::holds_at_level;
        st.level_exponent = 4;
        st.detail = "q >= 3h at level l^4";
        return st;
    }
    if (l == 5) {
        st.detail = "l = 5 excluded: no tame character switches the sign";
        return st;
    }
    st.kind = BLKind::holds_at_level;
    st.level_exponent = l == 3 ? 7 : 3;
    st.detail = l == 3 ? "l = 3 handled at level 3^7" : "q >= 3h at level l^3";
    return st;
}

std::vector<IrregularityReport> emit_table(long D_lo, long D_hi, const std::vector<long>& ls, int r) {
    std::vector<long> sorted = ls;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<IrregularityReport> out;
    for (long D = std::max(D_lo, 4L); D <= D_hi; ++D) {
        if (!is_valid_discriminant(D)) continue;
        const FundamentalDiscriminant d{D};
        for (long l : sorted)
            if (is_prime(l) && splitting(d, l) == SplittingType::inert) out.push_back(irregularity_lower_bound(D, l, r));
    }
    return out;
}

}  // namespace u3
