#include "olab/scale.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace olab;

TEST_CASE("scale arithmetic agrees with doubles in range") {
    const ScaleBase b(0.2);
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> e(-200.0, 200.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double x = std::exp(e(rng)), y = std::exp(e(rng));
        const Scale sx = b.from_double(x), sy = b.from_double(y);
        CHECK(b.to_double(sx) == doctest::Approx(x).epsilon(1e-12));
        CHECK(b.to_double(b.mul(sx, sy)) == doctest::Approx(x * y).epsilon(1e-12));
        CHECK(b.to_double(b.div(sx, sy)) == doctest::Approx(x / y).epsilon(1e-12));
        CHECK(b.cmp(sx, sy) == (x < y ? -1 : x > y ? 1 : 0));
        CHECK(b.to_double(b.mul(sx, b.inv(sx))) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("powers of the base are exact") {
    const ScaleBase b(0.2);
    for (int k = -20; k <= 20; ++k) {
        const Scale p = b.power(k);
        CHECK(p.l == 0.0);
        CHECK(b.to_double(p) == doctest::Approx(std::pow(0.2, k)).epsilon(1e-12));
    }
    CHECK(b.exponent_of(0.008) == 3);
    CHECK(b.exponent_of(0.3) == -1);
}

TEST_CASE("huge exponents compare and saturate") {
    const ScaleBase b(0.2);
    mpz_class big;
    mpz_ui_pow_ui(big.get_mpz_t(), 2, 4000);
    const Scale tiny = b.power(big);
    const Scale tinier = b.power(big + 1);
    CHECK(b.cmp(tinier, tiny) < 0);
    CHECK(b.to_double(tiny) == 0.0);
    CHECK(std::isinf(b.to_double(b.inv(tiny))));
    CHECK(b.cmp(b.mul(tiny, b.inv(tiny)), b.one()) == 0);
    CHECK(b.str(b.power(3)) == "8.000000e-3");
    CHECK(b.str(tiny).rfind("10^(", 0) == 0);
}
