#include "olab/scale.hpp"

#include "olab/errors.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace olab {

ScaleBase::ScaleBase(double c0) : c0_(c0) {
    if (!(c0 > 0.0 && c0 < 1.0)) fail(ErrorCode::Domain, "scale base must lie in (0,1)");
    lnb_ = -std::log(c0);
}

Scale ScaleBase::normalize(Scale s) const {
    const double q = std::floor(s.l / lnb_);
    if (q != 0.0) {
        s.e += mpz_class(static_cast<long>(q));
        s.l -= q * lnb_;
    }
    if (s.l < 0.0) s.l = 0.0;
    if (s.l >= lnb_) {
        s.e += 1;
        s.l = 0.0;
    }
    return s;
}

Scale ScaleBase::from_double(double x) const {
    if (!(x > 0.0) || !std::isfinite(x)) fail(ErrorCode::Domain, "scale from a non-positive value");
    return normalize({mpz_class(0), std::log(x)});
}

Scale ScaleBase::power(const mpz_class& k) const { return {mpz_class(-k), 0.0}; }

Scale ScaleBase::mul(const Scale& a, const Scale& b) const { return normalize({a.e + b.e, a.l + b.l}); }

Scale ScaleBase::inv(const Scale& a) const { return normalize({mpz_class(-a.e), -a.l}); }

Scale ScaleBase::div(const Scale& a, const Scale& b) const { return normalize({a.e - b.e, a.l - b.l}); }

int ScaleBase::cmp(const Scale& a, const Scale& b) const {
    // Both normalized, so the exponent decides unless equal.
    const int c = ::cmp(a.e, b.e);
    if (c != 0) return c < 0 ? -1 : 1;
    if (a.l < b.l) return -1;
    return a.l > b.l ? 1 : 0;
}

double ScaleBase::to_double(const Scale& a) const {
    if (a.e > 4000) return std::numeric_limits<double>::infinity();
    if (a.e < -4000) return 0.0;
    return std::exp(static_cast<double>(a.e.get_si()) * lnb_ + a.l);
}

long ScaleBase::exponent_of(double c) const {
    if (!(c > 0.0 && c < 1.0)) return -1;
    const double g = std::log(c) / std::log(c0_);
    const double r = std::round(g);
    if (r < 1.0 || std::abs(g - r) > 1e-9) return -1;
    return static_cast<long>(r);
}

std::string ScaleBase::str(const Scale& a) const {
    // e·log10(B) + l/ln10 as a decimal exponent, printed even when it overflows double.
    mpf_class ex(a.e, 128);
    ex *= lnb_ / std::log(10.0);
    ex += a.l / std::log(10.0);
    const double v = ex.get_d();
    const double fl = std::floor(v);
    char buf[96];
    if (std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.6fe%+.0f", std::pow(10.0, v - fl), fl);
        return buf;
    }
    std::snprintf(buf, sizeof buf, "10^(%.6e)", v);
    return buf;
}

}  // namespace olab
