#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "vispol/errors.hpp"
#include "vispol/twostep.hpp"

using namespace vispol;
using vispol::testing::two_outlet_ecosystem;

TEST_CASE("extract_feature") {
    ImageVector z;
    z.t = 1;
    z.z_minus_t = Eigen::VectorXd::Constant(2, 0.4);
    Rng rng(1);

    ExtractorConfig clean;
    CHECK(extract_feature(z, clean, rng) == 1.0);

    ExtractorConfig loaded;
    loaded.kappa_e = 0.5;
    CHECK(extract_feature(z, loaded, rng) == doctest::Approx(1.2).epsilon(1e-15));

    ExtractorConfig thresholded = loaded;
    thresholded.mode = ExtractorMode::Thresholded;
    thresholded.threshold = 0.5;
    CHECK(extract_feature(z, thresholded, rng) == 1.0);
    thresholded.threshold = 1.5;
    CHECK(extract_feature(z, thresholded, rng) == 0.0);
}

TEST_CASE("ols_fit") {
    // exact interpolation of a linear response
    Eigen::MatrixXd X(4, 2);
    X << 1, 0, 1, 1, 1, 2, 1, 3;
    Eigen::VectorXd beta_true(2);
    beta_true << 0.7, -1.3;
    const Eigen::VectorXd coef = ols_fit(X, X * beta_true);
    CHECK((coef - beta_true).cwiseAbs().maxCoeff() < 1e-10);

    // intercept-only design returns the sample mean
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(5, 1);
    Eigen::VectorXd y(5);
    y << 1, 2, 3, 4, 10;
    CHECK(ols_fit(ones, y)(0) == doctest::Approx(4.0).epsilon(1e-14));

    // fixed 5x2 system against the normal equations worked by hand
    Eigen::MatrixXd A(5, 2);
    A << 1, 2, 1, 4, 1, 5, 1, 7, 1, 8;
    Eigen::VectorXd b(5);
    b << 1.0, 2.0, 2.5, 3.5, 3.0;
    // X'X = [[5, 26], [26, 158]], X'y = [12, 71.5]
    // det = 5*158 - 26^2 = 114
    // beta = [ (158*12 - 26*71.5)/114, (5*71.5 - 26*12)/114 ]
    const double det = 114.0;
    const double b0 = (158.0 * 12.0 - 26.0 * 71.5) / det;
    const double b1 = (5.0 * 71.5 - 26.0 * 12.0) / det;
    const Eigen::VectorXd hand = ols_fit(A, b);
    CHECK(hand(0) == doctest::Approx(b0).epsilon(1e-12));
    CHECK(hand(1) == doctest::Approx(b1).epsilon(1e-12));

    // residual orthogonality
    const Eigen::VectorXd resid = b - A * hand;
    const double scale = (A.transpose() * b).cwiseAbs().maxCoeff();
    CHECK((A.transpose() * resid).cwiseAbs().maxCoeff() < 1e-8 * scale);

    // rank deficiency
    Eigen::MatrixXd collinear(5, 2);
    collinear.col(0).setOnes();
    collinear.col(1).setOnes();
    CHECK_THROWS_AS(ols_fit(collinear, b), EstimationError);
    CHECK_THROWS_AS(ols_fit(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Ones(1)),
                    EstimationError);
}

TEST_CASE("logistic_fit") {
    Rng rng(77);

    SUBCASE("score equation at convergence") {
        const int n = 400;
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = rng.normal();
            const double p = 1.0 / (1.0 + std::exp(-(-0.3 + 0.8 * X(i, 1))));
            y(i) = rng.uniform() < p ? 1.0 : 0.0;
        }
        const FitResult fit = logistic_fit(X, y);
        Eigen::VectorXd p(n);
        for (int i = 0; i < n; ++i)
            p(i) = 1.0 / (1.0 + std::exp(-X.row(i).dot(fit.coef)));
        CHECK((X.transpose() * (y - p)).cwiseAbs().maxCoeff() < 1e-8);

        // duplicating every row leaves the solution unchanged
        Eigen::MatrixXd X2(2 * n, 2);
        Eigen::VectorXd y2(2 * n);
        X2 << X, X;
        y2 << y, y;
        const FitResult fit2 = logistic_fit(X2, y2);
        CHECK((fit2.coef - fit.coef).cwiseAbs().maxCoeff() < 1e-9);
    }

    SUBCASE("null slope over replications") {
        const int reps = 200, n = 500;
        double sum = 0.0, sumsq = 0.0;
        for (int r = 0; r < reps; ++r) {
            Eigen::MatrixXd X(n, 2);
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i) {
                X(i, 0) = 1.0;
                X(i, 1) = rng.normal();
                y(i) = rng.uniform() < 0.3 ? 1.0 : 0.0;  // independent of X
            }
            const double slope = logistic_fit(X, y).coef(1);
            sum += slope;
            sumsq += slope * slope;
        }
        const double mean = sum / reps;
        const double sd = std::sqrt((sumsq - sum * sum / reps) / (reps - 1));
        CHECK(std::fabs(mean) < 3.0 * sd / std::sqrt(static_cast<double>(reps)));
    }

    SUBCASE("recovers a known coefficient within 5 percent") {
        const double beta_true = 0.369, alpha_true = -1.17;
        const int reps = 200, n = 2000;
        double sum = 0.0;
        for (int r = 0; r < reps; ++r) {
            Eigen::MatrixXd X(n, 2);
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i) {
                X(i, 0) = 1.0;
                X(i, 1) = rng.uniform() < 0.5 ? 1.0 : 0.0;
                const double p =
                    1.0 / (1.0 + std::exp(-(alpha_true + beta_true * X(i, 1))));
                y(i) = rng.uniform() < p ? 1.0 : 0.0;
            }
            sum += logistic_fit(X, y).coef(1);
        }
        CHECK(std::fabs(sum / reps - beta_true) < 0.05 * beta_true);
    }

    SUBCASE("separation halts with a diagnostic") {
        Eigen::MatrixXd X(6, 2);
        Eigen::VectorXd y(6);
        for (int i = 0; i < 6; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = i;
            y(i) = i >= 3 ? 1.0 : 0.0;  // perfectly separated
        }
        CHECK_THROWS_AS(logistic_fit(X, y), EstimationError);
    }
}

TEST_CASE("bias oracles") {
    CHECK(ovb_bias_oracle(0.1, 0.25, 0.0) == 0.0);
    CHECK(ovb_bias_oracle(0.0, 0.25, 2.0) == 0.0);
    CHECK(ovb_bias_oracle(0.1, 0.25, 2.0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK_THROWS_AS(ovb_bias_oracle(0.1, 0.0, 1.0), UsageError);

    Eigen::MatrixXd a0(2, 2);
    a0 << 1.0, 0.5, 0.5, 0.5;  // Y ~ Bernoulli(1/2)
    Eigen::VectorXd b0(2);
    b0 << 0.0, 0.0;
    CHECK(extraction_bias_oracle(a0, b0) == 0.0);

    const double c = 0.37;
    b0 << 0.0, c;
    CHECK(extraction_bias_oracle(a0, b0) == doctest::Approx(4.0 * c).epsilon(1e-12));
    CHECK(extraction_bias_oracle(a0, 3.0 * b0) ==
          doctest::Approx(12.0 * c).epsilon(1e-12));

    Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(2, 2);
    CHECK_THROWS_AS(extraction_bias_oracle(singular, b0), UsageError);
}

TEST_CASE("oracles agree with brute-force large-sample OLS") {
    Rng rng(12);

    BiasScenario ovb;
    ovb.name = "ovb";
    ovb.delta = 0.75;
    ovb.confound_loading = 0.8;
    ovb.sigma_r = 0.2;
    ovb.n = 1000000;
    const double ovb_limit = ovb.replicate_beta_hat(rng) - ovb.beta;
    CHECK(std::fabs(ovb_limit - ovb.oracle_bias()) <
          0.005 * std::fabs(ovb.oracle_bias()));

    BiasScenario extraction;
    extraction.name = "extraction";
    extraction.kappa_e = 0.5;
    extraction.confound_loading = 0.8;
    extraction.sigma_r = 0.2;
    extraction.n = 1000000;
    const double ext_limit = extraction.replicate_beta_hat(rng) - extraction.beta;
    CHECK(std::fabs(ext_limit - extraction.oracle_bias()) <
          0.01 * std::fabs(extraction.oracle_bias()));
}

TEST_CASE("verify_bias_propositions: all three scenarios match their oracles") {
    Rng rng(2025);
    const auto reports =
        verify_bias_propositions(default_bias_scenarios(), 200, rng);
    REQUIRE(reports.size() == 3);
    for (const auto& rep : reports) {
        INFO(rep.scenario);
        CHECK(std::fabs(rep.z_score) < 3.0);
        if (rep.scenario == "well_specified") CHECK(rep.oracle_bias == 0.0);
        if (rep.scenario == "extraction")
            CHECK(rep.oracle_bias == doctest::Approx(0.5 * 0.8).epsilon(1e-12));
        if (rep.scenario == "ovb")
            CHECK(rep.oracle_bias == doctest::Approx(0.8 * 0.75).epsilon(1e-12));
    }
    CHECK_THROWS_AS(verify_bias_propositions(default_bias_scenarios(), 10, rng),
                    UsageError);
}

TEST_CASE("two_step_estimate on simulated articles") {
    Rng rng(5150);

    SUBCASE("clean extractor on a two-outlet world recovers the contrast") {
        // same slant for both affiliations keeps the pooled log odds exact
        Ecosystem eco = two_outlet_ecosystem(0.5, 0.5);
        Rng gen(42);
        const Dataset data = generate_dataset(eco, 40000, gen);

        ExtractorConfig clean;
        clean.mode = ExtractorMode::Thresholded;
        RegressionSpec spec;
        spec.coded_outlets = {1};
        spec.family = SecondStage::Logistic;
        const TwoStepResult res = two_step_estimate(data, clean, spec, rng);
        CHECK(std::fabs(res.beta - 0.5) < 3.0 * res.se);
    }

    SUBCASE("endogenous extraction shifts the estimate by the oracle amount") {
        // outlet 1 loads on the designated nuisance coordinate, so eps_e is
        // outlet-correlated
        Ecosystem eco = two_outlet_ecosystem(0.5, 0.5);
        eco.outlets[1].gamma(0) = 0.8;
        Rng gen(43);
        const Dataset data = generate_dataset(eco, 20000, gen);

        RegressionSpec spec;
        spec.coded_outlets = {1};
        spec.family = SecondStage::Ols;
        ExtractorConfig clean;
        ExtractorConfig endo;
        endo.kappa_e = 0.5;
        Rng rng_a(7), rng_b(7);
        const double beta_clean = two_step_estimate(data, clean, spec, rng_a).beta;
        const double beta_endo = two_step_estimate(data, endo, spec, rng_b).beta;

        // in-sample OLS algebra: the shift equals e2' (Z'Z/n)^-1 (Z'eps_e/n)
        const long n = static_cast<long>(data.size());
        Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(2, 2);
        Eigen::VectorXd b0 = Eigen::VectorXd::Zero(2);
        for (const auto& rec : data) {
            const double y = rec.outlet_id == 1 ? 1.0 : 0.0;
            const double eps = endo.kappa_e * rec.image.z_minus_t(0);
            Eigen::Vector2d zrow(1.0, y);
            a0 += zrow * zrow.transpose();
            b0 += zrow * eps;
        }
        a0 /= static_cast<double>(n);
        b0 /= static_cast<double>(n);
        const double predicted = extraction_bias_oracle(a0, b0);
        CHECK(predicted > 0.0);
        CHECK(beta_endo - beta_clean == doctest::Approx(predicted).epsilon(1e-8));
    }

    SUBCASE("confounded world: controls attenuate the coefficient") {
        Ecosystem eco = two_outlet_ecosystem(0.4, 0.4);
        eco.kappa = 0.8;                 // T shifts the nuisance coordinate
        eco.outlets[1].gamma(0) = 0.8;   // which also drives outlet choice
        Rng gen(44);
        const Dataset data = generate_dataset(eco, 30000, gen);

        ExtractorConfig clean;
        clean.mode = ExtractorMode::Thresholded;
        RegressionSpec plain;
        plain.coded_outlets = {1};
        plain.family = SecondStage::Logistic;
        RegressionSpec controlled = plain;
        controlled.controls = Controls::Image;

        Rng ra(9), rb(9);
        const double beta_plain = two_step_estimate(data, clean, plain, ra).beta;
        const double beta_ctrl =
            two_step_estimate(data, clean, controlled, rb).beta;
        CHECK(beta_plain > beta_ctrl);
        CHECK(beta_ctrl > 0.0);
    }

    CHECK_THROWS_AS(
        two_step_estimate({}, ExtractorConfig{}, RegressionSpec{}, rng),
        UsageError);
}
