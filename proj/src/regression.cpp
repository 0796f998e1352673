#include "vispol/regression.hpp"

#include <cmath>

#include "vispol/errors.hpp"

namespace vispol {

namespace {

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

Eigen::VectorXd sandwich_se(const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& bread_inv,
                            const Eigen::VectorXd& resid) {
    // bread_inv * X' diag(resid^2) X * bread_inv
    Eigen::MatrixXd meat = X.transpose() *
                           resid.array().square().matrix().asDiagonal() * X;
    Eigen::MatrixXd cov = bread_inv * meat * bread_inv;
    return cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

Eigen::VectorXd ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() < X.cols())
        throw EstimationError("ols_fit: fewer rows than columns");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < X.cols())
        throw EstimationError("ols_fit: rank-deficient design matrix");
    return qr.solve(y);
}

FitResult ols_fit_full(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    FitResult out;
    out.coef = ols_fit(X, y);
    out.n = X.rows();
    const Eigen::VectorXd resid = y - X * out.coef;
    Eigen::MatrixXd xtx = X.transpose() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    Eigen::MatrixXd bread_inv =
        ldlt.solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
    out.robust_se = sandwich_se(X, bread_inv, resid);
    return out;
}

FitResult logistic_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       int max_iter) {
    const Eigen::Index n = X.rows(), d = X.cols();
    if (n < d) throw EstimationError("logistic_fit: fewer rows than columns");

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd p(n), w(n);

    for (int iter = 1; iter <= max_iter; ++iter) {
        const Eigen::VectorXd eta = X * beta;
        for (Eigen::Index i = 0; i < n; ++i) {
            p(i) = sigmoid(eta(i));
            w(i) = std::max(p(i) * (1.0 - p(i)), 1e-10);
        }
        const Eigen::VectorXd score = X.transpose() * (y - p);
        if (score.cwiseAbs().maxCoeff() < 1e-8) {
            FitResult out;
            out.coef = beta;
            out.n = n;
            out.iterations = iter - 1;
            Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
            if (ldlt.info() != Eigen::Success)
                throw EstimationError("logistic_fit: singular information matrix");
            Eigen::MatrixXd bread_inv = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
            out.robust_se = sandwich_se(X, bread_inv, y - p);
            return out;
        }

        Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success)
            throw EstimationError("logistic_fit: singular information matrix");
        beta += ldlt.solve(score);

        if (beta.cwiseAbs().maxCoeff() > 30.0)
            throw EstimationError(
                "logistic_fit: coefficients diverged (perfect separation?)");
    }
    throw EstimationError("logistic_fit: IRLS failed to converge");
}

}  // namespace vispol
