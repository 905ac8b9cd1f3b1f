#pragma once
// Finite reductive layer at a ramified prime: PGL2(F_p) ~ SO3(F_p) through the
// adjoint map, and the index-two sign character cutting out the Gross subgroup.

#include <array>
#include <cstdint>
#include <vector>

namespace u3 {

using Mat2p = std::array<long, 4>;  // row-major (a b; c d) over F_p
using Mat3p = std::array<long, 9>;  // row-major 3x3 over F_p

long mod_p(long a, long p);
long inv_mod(long a, long m);
long pow_mod(long b, long e, long m);
int legendre(long a, long p);

struct PGL2Element {
    long p;
    Mat2p m;  // canonical: first nonzero entry equal to 1
    static PGL2Element make(long p, Mat2p m);
    bool operator==(const PGL2Element& o) const { return p == o.p && m == o.m; }
};

struct O3Element {
    long p;
    Mat3p m;
    bool operator==(const O3Element& o) const { return p == o.p && m == o.m; }
    bool operator<(const O3Element& o) const { return m < o.m; }
};

/// Form matrix [[0,0,1],[0,2,0],[1,0,0]].
Mat3p o3_form(long p);
bool preserves_form(const O3Element& g);
long det3(const Mat3p& a, long p);
Mat3p mul3(const Mat3p& a, const Mat3p& b, long p);
PGL2Element mul2(const PGL2Element& a, const PGL2Element& b);

O3Element adjoint(const PGL2Element& g);
/// +1 iff (+-)h lies in the image of PSL2.
int sign_character(const O3Element& h);
/// Sign character of the reflexion diag(1,-1,1); equals (-1/p).
int reflexion_sign(long p);
/// |<-1, adjoint(PSL2(F_p))>|, computed by closure. Requires p <= 13.
long gross_subgroup_order(long p);

std::vector<PGL2Element> all_pgl2(long p);
/// Brute-force enumeration of O3(F_p) for the fixed form.
std::vector<O3Element> all_o3(long p);

}  // namespace u3
