#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace vispol::stats {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    std::size_t m = 0;  // second sample size; 0 for one-sample tests
};

struct CorrelationResult {
    double coefficient = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

// Two-sample Kolmogorov-Smirnov. Statistic is the sup over ECDF differences;
// p-value uses the asymptotic Kolmogorov distribution at sqrt(nm/(n+m)) * D.
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// One-sample t-test of H0: mean == mu0, two-sided p via Student's t (n-1 df).
TestResult t_test_one_sample(std::span<const double> x, double mu0);

// Pearson goodness-of-fit of counts against a fixed probability vector.
TestResult chi_square_gof(std::span<const long> observed,
                          std::span<const double> expected_probs);

CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

// Spearman rank correlation with average ranks on ties.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

struct PcaResult {
    Eigen::MatrixXd components;          // d x k, orthonormal columns
    Eigen::VectorXd explained_variance;  // k, descending
    Eigen::MatrixXd projections;         // n x k (centered data * components)
};

// Top-k principal components of the row-sample covariance; data is centered
// internally.
PcaResult pca(const Eigen::MatrixXd& data, int k);

struct KmeansResult {
    std::vector<int> assignments;
    Eigen::MatrixXd centroids;  // k x d
    double inertia = 0.0;
};

// Lloyd's algorithm with k-means++ seeding; `restarts` independent runs,
// best inertia wins. Deterministic given seed.
KmeansResult kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                    int max_iter = 100, int restarts = 10);

// --- distribution helpers (asymptotic p-values) ---

// Kolmogorov survival function Q(x) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2),
// series truncated at 100 terms.
double kolmogorov_sf(double x);

// CDF of Student's t with nu degrees of freedom.
double student_t_cdf(double t, double nu);

// Survival function of the chi-square distribution with k degrees of freedom.
double chi_square_sf(double x, double k);

// Regularized incomplete beta I_x(a, b) and lower incomplete gamma P(a, x).
double reg_inc_beta(double a, double b, double x);
double reg_inc_gamma_lower(double a, double x);

// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(std::span<const double> x);

}  // namespace vispol::stats
