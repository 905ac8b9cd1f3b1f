#pragma once
// Imaginary quadratic fields Q(sqrt(-D)) with D odd: discriminants, symbols,
// splitting, class numbers and the root-number bookkeeping of the canonical character.

#include <cstdint>

namespace u3 {

struct FundamentalDiscriminant {
    long D;
};

enum class SplittingType { split, inert, ramified };
const char* to_string(SplittingType s);

bool is_prime(long n);

/// Accepts D > 3 odd squarefree with D = 3 mod 4; throws NotFundamental otherwise.
FundamentalDiscriminant validate_discriminant(long D);
bool is_valid_discriminant(long D);

/// Kronecker symbol (a/n).
int kronecker(long a, long n);

SplittingType splitting(FundamentalDiscriminant D, long p);

/// Reduced primitive forms of discriminant -D.
long class_number_forms(FundamentalDiscriminant D);
/// |sum_{a<D} (-D/a) a| / D.
long class_number_dirichlet(FundamentalDiscriminant D);

/// W(lambda_c^3) = (-2/D).
int canonical_cube_root_number(FundamentalDiscriminant D);
/// (-1)^a * chi(-1) * W.
int twisted_root_number(int W, int a, int chi_at_minus1);

/// Characters chi of the cyclic group of order l+1 with chi^3 != 1 and chi(-1) = 1,
/// counted by enumeration. Throws InvalidInput for l = 2.
long count_sign_switching_tame_characters(long l);
/// (l-1)/2 if 3 does not divide l+1, else (l-5)/2.
long sign_switching_closed_form(long l);

}  // namespace u3
