#pragma once

#include <Eigen/Dense>

namespace vispol {

struct FitResult {
    Eigen::VectorXd coef;
    Eigen::VectorXd robust_se;  // heteroskedasticity-robust (sandwich)
    long n = 0;
    int iterations = 0;         // IRLS iterations; 0 for OLS
};

// Least squares via column-pivoted QR. Throws EstimationError when the
// design is rank deficient or has fewer rows than columns.
Eigen::VectorXd ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

FitResult ols_fit_full(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Bernoulli log-likelihood maximized by IRLS. Converged when the score
// |X'(y - p)|_inf drops below 1e-8; halts with EstimationError if any
// coefficient passes 30 in magnitude (separation guard) or the iteration
// cap is hit.
FitResult logistic_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       int max_iter = 100);

}  // namespace vispol
