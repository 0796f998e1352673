#pragma once

#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vispol/ecosystem.hpp"
#include "vispol/regression.hpp"
#include "vispol/rng.hpp"

namespace vispol {

enum class ExtractorMode { Continuous, Thresholded };

// First-stage feature extractor: score = t + eps_r + kappa_e * w, where
// eps_r ~ N(0, sigma_r^2) is random measurement noise and w is the
// designated nuisance coordinate (z_minus_t[0]), so kappa_e * w plays the
// extraction error correlated with image content.
struct ExtractorConfig {
    double sigma_r = 0.0;
    double kappa_e = 0.0;
    ExtractorMode mode = ExtractorMode::Continuous;
    double threshold = 0.5;
};

double extract_feature(const ImageVector& z, const ExtractorConfig& cfg,
                       Rng& rng);

enum class SecondStage { Ols, Logistic };
enum class Controls { None, Topics, Image, TopicsAndImage };

struct RegressionSpec {
    std::set<int> coded_outlets;  // outlets coded as Y = 1
    SecondStage family = SecondStage::Ols;
    Controls controls = Controls::None;
};

struct TwoStepResult {
    double beta = 0.0;  // coefficient on the outlet indicator
    double se = 0.0;
    FitResult fit;      // full second-stage fit (column 1 is the indicator)
};

// Extracts T-hat over the dataset (per-record noise streams split by record
// id) and regresses it on the outlet indicator plus optional controls.
// Topics controls drop the last topic share (they sum to one).
TwoStepResult two_step_estimate(const Dataset& data, const ExtractorConfig& cfg,
                                const RegressionSpec& spec, Rng& rng);

// Asymptotic slope bias when the second stage omits a correlated function
// k(.) of the image: lambda * delta with lambda = Cov(Y, k) / Var(Y).
double ovb_bias_oracle(double cov_y_k, double var_y, double delta);

// Asymptotic slope bias from extraction error correlated with the
// regressors: second component of A0^{-1} b0, A0 = E[ZZ'], b0 = E[Z eps_e].
double extraction_bias_oracle(const Eigen::MatrixXd& A0,
                              const Eigen::VectorXd& b0);

// Linear world matching the bias propositions' premises:
//   Y ~ Bernoulli(0.5)
//   W = confound_loading * (Y - 1/2) + N(0, sigma_w^2)   (nuisance variable)
//   T = alpha + beta * Y + delta * W + N(0, sigma_e^2)   (true outcome)
//   T-hat = T + eps_r + kappa_e * W                      (extraction stage)
// and the observed regression of T-hat on (1, Y).
struct BiasScenario {
    std::string name;
    double alpha = 0.0;
    double beta = 0.4;
    double delta = 0.0;             // omitted-variable effect
    double confound_loading = 0.0;  // makes Cov(Y, W) nonzero
    double sigma_w = 0.5;
    double sigma_e = 0.3;
    double sigma_r = 0.0;           // exogenous extraction noise
    double kappa_e = 0.0;           // endogenous extraction loading
    long n = 5000;

    // Analytic moments implied by the DGP above.
    double var_y() const { return 0.25; }
    double cov_y_w() const { return 0.25 * confound_loading; }
    Eigen::MatrixXd moment_matrix() const;   // A0 over Z = (1, Y)
    Eigen::VectorXd cross_moments() const;   // b0 = E[Z * kappa_e * W]
    double oracle_bias() const;              // lambda*delta + e2' A0^-1 b0

    // One simulated draw of (y, w, that).
    struct Row {
        double y, w, t_hat;
    };
    std::vector<Row> simulate(long rows, Rng& rng) const;
    // OLS slope of t_hat on (1, y) for one simulated replication.
    double replicate_beta_hat(Rng& rng) const;
};

// Default scenario triple used by the verification report.
std::vector<BiasScenario> default_bias_scenarios();

struct ScenarioReport {
    std::string scenario;
    double empirical_bias = 0.0;
    double oracle_bias = 0.0;
    double mc_stderr = 0.0;
    double z_score = 0.0;
    int replications = 0;
};

// Monte Carlo confirmation of the three propositions: mean beta-hat bias
// across replications against the analytic oracle, with the MC standard
// error of the mean.
std::vector<ScenarioReport> verify_bias_propositions(
    const std::vector<BiasScenario>& scenarios, int replications, Rng& rng);

std::string bias_report_csv(const std::vector<ScenarioReport>& reports);

}  // namespace vispol
