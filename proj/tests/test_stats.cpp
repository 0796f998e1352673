#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "vispol/errors.hpp"
#include "vispol/rng.hpp"
#include "vispol/stats.hpp"

using namespace vispol;
using namespace vispol::stats;

namespace {

// Brute-force sup over ECDF differences evaluated at every sample point.
double ks_brute_force(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pts = a;
    pts.insert(pts.end(), b.begin(), b.end());
    double d = 0.0;
    for (double t : pts) {
        double fa = 0.0, fb = 0.0;
        for (double x : a) fa += x <= t ? 1.0 : 0.0;
        for (double x : b) fb += x <= t ? 1.0 : 0.0;
        d = std::max(d, std::fabs(fa / a.size() - fb / b.size()));
    }
    return d;
}

}  // namespace

TEST_CASE("special function values") {
    // reference values from an independent implementation
    CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
    CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
    CHECK(kolmogorov_sf(2.0) == doctest::Approx(0.0006709252557796953).epsilon(1e-8));
    CHECK(kolmogorov_sf(0.0) == 1.0);

    CHECK(student_t_cdf(1.0, 5) == doctest::Approx(0.8183912661754387).epsilon(1e-10));
    CHECK(student_t_cdf(2.5, 9) == doctest::Approx(0.9830690861585071).epsilon(1e-10));
    CHECK(student_t_cdf(-1.7, 3) == doctest::Approx(0.09384532077670496).epsilon(1e-10));

    CHECK(chi_square_sf(3.84, 1) == doctest::Approx(0.05004352124870519).epsilon(1e-10));
    CHECK(chi_square_sf(7.81, 3) == doctest::Approx(0.05010605635000589).epsilon(1e-10));
    CHECK(chi_square_sf(30.58, 20) == doctest::Approx(0.060984974425477755).epsilon(1e-10));

    CHECK(reg_inc_beta(2, 3, 0.4) == doctest::Approx(0.5248).epsilon(1e-12));
    CHECK(reg_inc_gamma_lower(2.5, 1.3) ==
          doctest::Approx(0.23863473215498604).epsilon(1e-10));
}

TEST_CASE("ks_two_sample basics") {
    std::vector<double> same{0.1, 0.5, 0.9};
    CHECK(ks_two_sample(same, same).statistic == 0.0);

    std::vector<double> lo{0.0, 1.0}, hi{10.0, 11.0};
    CHECK(ks_two_sample(lo, hi).statistic == 1.0);

    std::vector<double> a{1, 2, 3}, b{1.5, 2.5, 3.5};
    const auto r = ks_two_sample(a, b);
    CHECK(r.statistic == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(0.9962551923793987).epsilon(1e-9));

    CHECK_THROWS_AS(ks_two_sample({}, a), UsageError);
}

TEST_CASE("ks_two_sample equals brute force for small samples") {
    Rng rng(3);
    for (int rep = 0; rep < 40; ++rep) {
        const int n = 1 + static_cast<int>(rng.uniform_int(50));
        const int m = 1 + static_cast<int>(rng.uniform_int(50));
        std::vector<double> a(n), b(m);
        for (auto& x : a) x = std::floor(rng.normal() * 4.0) / 4.0;  // force ties
        for (auto& x : b) x = std::floor(rng.normal() * 4.0) / 4.0;
        CHECK(ks_two_sample(a, b).statistic ==
              doctest::Approx(ks_brute_force(a, b)).epsilon(1e-13));
    }
}

TEST_CASE("ks null rejection rate is close to nominal") {
    Rng rng(11);
    int rejections = 0;
    const int pairs = 2000;
    std::vector<double> a(200), b(200);
    for (int i = 0; i < pairs; ++i) {
        for (auto& x : a) x = rng.normal();
        for (auto& x : b) x = rng.normal();
        if (ks_two_sample(a, b).p_value < 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / pairs;
    CHECK(rate >= 0.03);
    CHECK(rate <= 0.07);
}

TEST_CASE("t_test_one_sample") {
    std::vector<double> x{1, 2, 3};
    const auto r = t_test_one_sample(x, 0.0);
    CHECK(r.statistic == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(0.07417990022744853).epsilon(1e-9));

    const auto centered = t_test_one_sample(x, 2.0);
    CHECK(centered.statistic == 0.0);
    CHECK(centered.p_value == doctest::Approx(1.0));

    // scale equivariance
    std::vector<double> x2{3, 6, 9};
    CHECK(t_test_one_sample(x2, 0.0).statistic ==
          doctest::Approx(r.statistic).epsilon(1e-12));

    CHECK_THROWS_AS(t_test_one_sample({1.0, 1.0}, 0.0), UsageError);
    CHECK_THROWS_AS(t_test_one_sample({1.0}, 0.0), UsageError);
}

TEST_CASE("t statistic under the null follows Student's t") {
    Rng rng(17);
    const int sims = 5000;
    std::vector<double> stats_sample(sims);
    std::vector<double> x(10);
    for (int s = 0; s < sims; ++s) {
        for (auto& v : x) v = rng.normal();
        stats_sample[s] = t_test_one_sample(x, 0.0).statistic;
    }
    std::sort(stats_sample.begin(), stats_sample.end());
    double d = 0.0;
    for (int i = 0; i < sims; ++i) {
        const double f = student_t_cdf(stats_sample[i], 9.0);
        d = std::max(d, std::fabs(f - (i + 1.0) / sims));
        d = std::max(d, std::fabs(f - static_cast<double>(i) / sims));
    }
    CHECK(d < 0.03);
}

TEST_CASE("pearson and spearman") {
    std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
    CHECK(pearson(x, y).coefficient == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(pearson(x, y).p_value == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(spearman(x, y).coefficient == doctest::Approx(0.8).epsilon(1e-12));

    CHECK(pearson(x, x).coefficient == doctest::Approx(1.0));
    std::vector<double> neg{5, 3, 1, -1};  // y = -2x + 7
    CHECK(pearson(x, neg).coefficient == doctest::Approx(-1.0));
    CHECK(spearman(x, neg).coefficient == doctest::Approx(-1.0));

    // monotone data: both coincide
    std::vector<double> lin{2, 4, 6, 8};
    CHECK(pearson(x, lin).coefficient ==
          doctest::Approx(spearman(x, lin).coefficient).epsilon(1e-12));

    // ties get average ranks
    const auto ranks = average_ranks(std::vector<double>{3.0, 1.0, 3.0, 2.0});
    CHECK(ranks[0] == doctest::Approx(3.5));
    CHECK(ranks[1] == doctest::Approx(1.0));
    CHECK(ranks[2] == doctest::Approx(3.5));
    CHECK(ranks[3] == doctest::Approx(2.0));

    std::vector<double> flat{1, 1, 1, 1};
    CHECK_THROWS_AS(pearson(x, flat), UsageError);
}

TEST_CASE("chi_square_gof") {
    std::vector<long> obs{250, 250, 250, 250};
    std::vector<double> probs{0.25, 0.25, 0.25, 0.25};
    const auto r = chi_square_gof(obs, probs);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == doctest::Approx(1.0));

    std::vector<long> skew{400, 100, 250, 250};
    CHECK(chi_square_gof(skew, probs).p_value < 1e-6);
}

TEST_CASE("pca") {
    // rank-1 data: a line through the origin and its negation
    Eigen::MatrixXd line(6, 3);
    Eigen::RowVector3d dir(1.0, -2.0, 0.5);
    for (int i = 0; i < 6; ++i) line.row(i) = (i - 2.5) * dir;
    const auto r = pca(line, 2);
    CHECK(r.explained_variance(0) > 0.0);
    CHECK(r.explained_variance(1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));

    Rng rng(23);
    Eigen::MatrixXd data(40, 5);
    for (int i = 0; i < data.rows(); ++i)
        for (int j = 0; j < data.cols(); ++j) data(i, j) = rng.normal();
    const auto full = pca(data, 5);
    // orthonormal components
    Eigen::MatrixXd gram = full.components.transpose() * full.components;
    CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-9);
    // projections decorrelated
    Eigen::MatrixXd centered = full.projections.rowwise() -
                               full.projections.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered / (data.rows() - 1.0);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            if (i != j) CHECK(std::fabs(cov(i, j)) < 1e-8);
    // full-rank reconstruction
    Eigen::MatrixXd mean_rows = data.colwise().mean().replicate(data.rows(), 1);
    Eigen::MatrixXd recon =
        full.projections * full.components.transpose() + mean_rows;
    CHECK((recon - data).cwiseAbs().maxCoeff() < 1e-8);

    CHECK_THROWS_AS(pca(data, 6), UsageError);
    CHECK_THROWS_AS(pca(data, 0), UsageError);
}

TEST_CASE("kmeans separates two blobs and matches the brute-force optimum") {
    Rng rng(31);
    Eigen::MatrixXd pts(20, 2);
    std::vector<int> truth(20);
    for (int i = 0; i < 20; ++i) {
        const bool second = i >= 10;
        truth[i] = second ? 1 : 0;
        pts(i, 0) = (second ? 8.0 : 0.0) + 0.5 * rng.normal();
        pts(i, 1) = (second ? 8.0 : 0.0) + 0.5 * rng.normal();
    }
    const auto r = kmeans(pts, 2, 99);

    // brute force over all bipartitions (point 0 pinned to side 0)
    double best_inertia = 1e300;
    unsigned best_mask = 0;
    for (unsigned mask = 0; mask < (1u << 19); ++mask) {
        Eigen::RowVector2d sum0 = Eigen::RowVector2d::Zero();
        Eigen::RowVector2d sum1 = Eigen::RowVector2d::Zero();
        int n0 = 0, n1 = 0;
        for (int i = 0; i < 20; ++i) {
            const bool side1 = i > 0 && ((mask >> (i - 1)) & 1u);
            if (side1) {
                sum1 += pts.row(i);
                ++n1;
            } else {
                sum0 += pts.row(i);
                ++n0;
            }
        }
        if (n1 == 0) continue;
        double inertia = 0.0;
        for (int i = 0; i < 20; ++i) {
            const bool side1 = i > 0 && ((mask >> (i - 1)) & 1u);
            const Eigen::RowVector2d c = side1 ? sum1 / n1 : sum0 / n0;
            inertia += (pts.row(i) - c).squaredNorm();
        }
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best_mask = mask;
        }
    }
    CHECK(r.inertia == doctest::Approx(best_inertia).epsilon(1e-10));
    // optimal bipartition is the blob split (up to relabeling)
    for (int i = 1; i < 20; ++i) {
        const int side = (best_mask >> (i - 1)) & 1u;
        CHECK(side == truth[i]);
        CHECK((r.assignments[i] == r.assignments[0]) == (truth[i] == truth[0]));
    }

    // singleton clusters: zero inertia
    CHECK(kmeans(pts.topRows(5), 5, 1).inertia ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(kmeans(pts, 21, 1), UsageError);

    // determinism
    const auto r2 = kmeans(pts, 2, 99);
    CHECK(r.assignments == r2.assignments);
    CHECK(r.inertia == r2.inertia);
}

TEST_CASE("kmeans inertia is non-increasing across Lloyd iterations") {
    // run with max_iter = 1, 2, 3, ... and check the best-restart inertia
    // never goes up as iterations are allowed to continue
    Rng rng(5);
    Eigen::MatrixXd pts(60, 3);
    for (int i = 0; i < pts.rows(); ++i)
        for (int j = 0; j < 3; ++j) pts(i, j) = rng.normal();
    double prev = 1e300;
    for (int iters = 1; iters <= 8; ++iters) {
        const double inertia = kmeans(pts, 4, 7, iters, 1).inertia;
        CHECK(inertia <= prev + 1e-9);
        prev = inertia;
    }
}
