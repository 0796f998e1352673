#include "vispol/twostep.hpp"

#include <cmath>
#include <sstream>

#include "vispol/errors.hpp"
#include "vispol/format.hpp"

namespace vispol {

double extract_feature(const ImageVector& z, const ExtractorConfig& cfg,
                       Rng& rng) {
    if (cfg.sigma_r < 0.0) throw ConfigError("extractor: sigma_r must be >= 0");
    double score = static_cast<double>(z.t);
    if (cfg.sigma_r > 0.0) score += cfg.sigma_r * rng.normal();
    if (cfg.kappa_e != 0.0) {
        if (z.z_minus_t.size() == 0)
            throw ConfigError("extractor: no nuisance coordinate to load on");
        score += cfg.kappa_e * z.z_minus_t(0);
    }
    if (cfg.mode == ExtractorMode::Thresholded)
        return score > cfg.threshold ? 1.0 : 0.0;
    return score;
}

TwoStepResult two_step_estimate(const Dataset& data, const ExtractorConfig& cfg,
                                const RegressionSpec& spec, Rng& rng) {
    if (data.empty()) throw UsageError("two_step_estimate: empty dataset");
    if (spec.coded_outlets.empty())
        throw UsageError("two_step_estimate: no coded outlets");
    if (spec.family == SecondStage::Logistic &&
        cfg.mode != ExtractorMode::Thresholded)
        throw UsageError(
            "two_step_estimate: logistic second stage needs a thresholded "
            "extractor");

    const long n = static_cast<long>(data.size());
    const int n_topics = static_cast<int>(data.front().context.topics.size());
    const int d_z = static_cast<int>(data.front().image.z_minus_t.size());
    const bool topics = spec.controls == Controls::Topics ||
                        spec.controls == Controls::TopicsAndImage;
    const bool image = spec.controls == Controls::Image ||
                       spec.controls == Controls::TopicsAndImage;
    // topics sum to one, so the last share is dropped against the intercept
    const int d = 2 + (topics ? n_topics - 1 : 0) + (image ? d_z : 0);

    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd t_hat(n);
    for (long i = 0; i < n; ++i) {
        const auto& rec = data[i];
        Rng r = rng.split("extract", static_cast<std::uint64_t>(rec.record_id));
        t_hat(i) = extract_feature(rec.image, cfg, r);
        int col = 0;
        X(i, col++) = 1.0;
        X(i, col++) = spec.coded_outlets.count(rec.outlet_id) ? 1.0 : 0.0;
        if (topics)
            for (int k = 0; k + 1 < n_topics; ++k)
                X(i, col++) = rec.context.topics(k);
        if (image)
            for (int k = 0; k < d_z; ++k) X(i, col++) = rec.image.z_minus_t(k);
    }

    TwoStepResult out;
    out.fit = spec.family == SecondStage::Ols ? ols_fit_full(X, t_hat)
                                              : logistic_fit(X, t_hat);
    out.beta = out.fit.coef(1);
    out.se = out.fit.robust_se(1);
    return out;
}

double ovb_bias_oracle(double cov_y_k, double var_y, double delta) {
    if (var_y <= 0.0) throw UsageError("ovb_bias_oracle: Var(Y) must be > 0");
    return cov_y_k / var_y * delta;
}

double extraction_bias_oracle(const Eigen::MatrixXd& A0,
                              const Eigen::VectorXd& b0) {
    if (A0.rows() != A0.cols() || A0.rows() != b0.size() || A0.rows() < 2)
        throw UsageError("extraction_bias_oracle: shape mismatch");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A0);
    if (!lu.isInvertible())
        throw UsageError("extraction_bias_oracle: singular moment matrix");
    return lu.solve(b0)(1);
}

Eigen::MatrixXd BiasScenario::moment_matrix() const {
    Eigen::MatrixXd a(2, 2);
    a << 1.0, 0.5, 0.5, 0.5;  // E[ZZ'] for Z = (1, Y), Y ~ Bernoulli(1/2)
    return a;
}

Eigen::VectorXd BiasScenario::cross_moments() const {
    // E[W] = 0, E[YW] = confound_loading * (E[Y^2] - E[Y]/2) = loading / 4
    Eigen::VectorXd b(2);
    b << 0.0, kappa_e * 0.25 * confound_loading;
    return b;
}

double BiasScenario::oracle_bias() const {
    double bias = 0.0;
    if (delta != 0.0) bias += ovb_bias_oracle(cov_y_w(), var_y(), delta);
    if (kappa_e != 0.0)
        bias += extraction_bias_oracle(moment_matrix(), cross_moments());
    return bias;
}

std::vector<BiasScenario::Row> BiasScenario::simulate(long rows,
                                                      Rng& rng) const {
    std::vector<Row> out;
    out.reserve(static_cast<std::size_t>(rows));
    for (long i = 0; i < rows; ++i) {
        Row r;
        r.y = rng.uniform() < 0.5 ? 0.0 : 1.0;
        r.w = confound_loading * (r.y - 0.5) + sigma_w * rng.normal();
        const double t = alpha + beta * r.y + delta * r.w + sigma_e * rng.normal();
        r.t_hat = t + sigma_r * rng.normal() + kappa_e * r.w;
        out.push_back(r);
    }
    return out;
}

double BiasScenario::replicate_beta_hat(Rng& rng) const {
    const auto rows = simulate(n, rng);
    Eigen::MatrixXd X(rows.size(), 2);
    Eigen::VectorXd y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = rows[i].y;
        y(i) = rows[i].t_hat;
    }
    return ols_fit(X, y)(1);
}

std::vector<BiasScenario> default_bias_scenarios() {
    BiasScenario well;
    well.name = "well_specified";
    well.sigma_r = 0.2;

    BiasScenario extraction;
    extraction.name = "extraction";
    extraction.sigma_r = 0.2;
    extraction.kappa_e = 0.5;
    extraction.confound_loading = 0.8;

    BiasScenario ovb;
    ovb.name = "ovb";
    ovb.sigma_r = 0.2;
    ovb.delta = 0.75;
    ovb.confound_loading = 0.8;

    return {well, extraction, ovb};
}

std::vector<ScenarioReport> verify_bias_propositions(
    const std::vector<BiasScenario>& scenarios, int replications, Rng& rng) {
    if (replications < 50)
        throw UsageError("verify_bias_propositions: need >= 50 replications");

    std::vector<ScenarioReport> out;
    for (const auto& sc : scenarios) {
        Rng stream = rng.split(sc.name);
        double sum = 0.0, sumsq = 0.0;
        for (int r = 0; r < replications; ++r) {
            Rng rep = stream.split(static_cast<std::uint64_t>(r));
            const double bias = sc.replicate_beta_hat(rep) - sc.beta;
            sum += bias;
            sumsq += bias * bias;
        }
        ScenarioReport rep;
        rep.scenario = sc.name;
        rep.replications = replications;
        rep.empirical_bias = sum / replications;
        rep.oracle_bias = sc.oracle_bias();
        const double var =
            (sumsq - sum * sum / replications) / (replications - 1.0);
        rep.mc_stderr = std::sqrt(std::max(0.0, var) / replications);
        rep.z_score = rep.mc_stderr > 0.0
                          ? (rep.empirical_bias - rep.oracle_bias) / rep.mc_stderr
                          : 0.0;
        out.push_back(rep);
    }
    return out;
}

std::string bias_report_csv(const std::vector<ScenarioReport>& reports) {
    std::ostringstream os;
    os << "scenario,empirical_bias,oracle_bias,mc_stderr,z_score,replications\n";
    for (const auto& r : reports)
        os << r.scenario << ',' << format_num(r.empirical_bias) << ','
           << format_num(r.oracle_bias) << ',' << format_num(r.mc_stderr) << ','
           << format_num(r.z_score) << ',' << r.replications << '\n';
    return os.str();
}

}  // namespace vispol
