#include <cmath>
#include <vector>

#include "doctest.h"
#include "vispol/rng.hpp"

using namespace vispol;

TEST_CASE("same seed reproduces the stream, splits are independent") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng root(7);
    Rng s1 = root.split("train");
    Rng s2 = root.split("measure");
    Rng s1_again = root.split("train");
    CHECK(s1.next_u64() == s1_again.next_u64());
    CHECK(Rng(7).split("train", 3).next_u64() ==
          Rng(7).split("train", 3).next_u64());
    CHECK(s1.next_u64() != s2.next_u64());
}

TEST_CASE("uniform stays in [0,1) and has the right mean") {
    Rng rng(1);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::fabs(sum / n - 0.5) < 0.005);
}

TEST_CASE("gumbel inverse transform quantiles") {
    CHECK(gumbel_from_uniform(0.5) == doctest::Approx(0.36651292058166435).epsilon(1e-12));
    CHECK(gumbel_from_uniform(std::exp(-1.0)) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    // extreme inputs stay finite
    CHECK(std::isfinite(gumbel_from_uniform(0.0)));
    CHECK(std::isfinite(gumbel_from_uniform(1.0)));
}

TEST_CASE("gumbel draws: mean matches Euler-Mascheroni, CDF at 0 is 1/e") {
    Rng rng(42);
    const int n = 1000000;
    double sum = 0.0;
    long below0 = 0;
    for (int i = 0; i < n; ++i) {
        const double g = sample_gumbel(rng);
        sum += g;
        if (g <= 0.0) ++below0;
    }
    CHECK(std::fabs(sum / n - 0.5772156649) < 0.01);
    CHECK(std::fabs(static_cast<double>(below0) / n - std::exp(-1.0)) < 0.005);
}

TEST_CASE("normal and gamma moments") {
    Rng rng(9);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(std::fabs(s / n) < 0.01);
    CHECK(std::fabs(s2 / n - 1.0) < 0.02);

    for (double shape : {0.5, 1.0, 2.5, 8.0}) {
        double gs = 0.0;
        for (int i = 0; i < n / 2; ++i) gs += rng.gamma(shape);
        CHECK(gs / (n / 2) == doctest::Approx(shape).epsilon(0.03));
    }
}

TEST_CASE("uniform_int covers the range without bias") {
    Rng rng(5);
    std::vector<long> counts(7, 0);
    const int n = 140000;
    for (int i = 0; i < n; ++i) ++counts[rng.uniform_int(7)];
    for (long c : counts) CHECK(std::fabs(c - n / 7.0) < 5.0 * std::sqrt(n / 7.0));
}
