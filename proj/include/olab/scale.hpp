#pragma once

#include <gmpxx.h>

#include <string>

namespace olab {

// Positive real B^e · exp(l) with B = 1/c0 > 1, an exact integer exponent and l in [0, ln B).
// Lets the comb builder carry ratios like 5^(2^20000) without overflow.
struct Scale {
    mpz_class e;
    double l = 0.0;
};

class ScaleBase {
public:
    // c0 in (0,1): every ratio handled must be an integer power of c0.
    explicit ScaleBase(double c0);

    double c0() const { return c0_; }
    double ln_base() const { return lnb_; }

    Scale one() const { return {}; }
    Scale from_double(double x) const;
    // c0^k
    Scale power(const mpz_class& k) const;
    Scale normalize(Scale s) const;
    Scale mul(const Scale& a, const Scale& b) const;
    Scale div(const Scale& a, const Scale& b) const;
    Scale inv(const Scale& a) const;
    int cmp(const Scale& a, const Scale& b) const;
    // 0 on underflow, +inf on overflow.
    double to_double(const Scale& a) const;
    // Integer g with c = c0^g, or -1 when c is not such a power.
    long exponent_of(double c) const;
    std::string str(const Scale& a) const;

private:
    double c0_;
    double lnb_;
};

}  // namespace olab
