#include "vispol/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vispol/errors.hpp"
#include "vispol/rng.hpp"

namespace vispol::stats {

namespace {

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-15;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

// Series expansion of the lower incomplete gamma P(a, x), for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 3e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for the upper incomplete gamma Q(a, x), for x >= a + 1.
double gamma_q_cf(double a, double x) {
    constexpr double kFpMin = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 3e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

double reg_inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double reg_inc_gamma_lower(double a, double x) {
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        sum += sign * std::exp(-2.0 * k * k * x * x);
        sign = -sign;
    }
    return clamp01(2.0 * sum);
}

double student_t_cdf(double t, double nu) {
    const double x = nu / (nu + t * t);
    const double half_tail = 0.5 * reg_inc_beta(0.5 * nu, 0.5, x);
    return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

double chi_square_sf(double x, double k) {
    if (x <= 0.0) return 1.0;
    return clamp01(1.0 - reg_inc_gamma_lower(0.5 * k, 0.5 * x));
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw UsageError("ks_two_sample: empty sample");
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const std::size_t n = sa.size(), m = sb.size();
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        const double v = std::min(sa[i], sb[j]);
        while (i < n && sa[i] <= v) ++i;
        while (j < m && sb[j] <= v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / n -
                                  static_cast<double>(j) / m));
    }
    const double ne = static_cast<double>(n) * static_cast<double>(m) /
                      static_cast<double>(n + m);
    TestResult r;
    r.statistic = d;
    r.p_value = kolmogorov_sf(std::sqrt(ne) * d);
    r.n = n;
    r.m = m;
    return r;
}

TestResult t_test_one_sample(std::span<const double> x, double mu0) {
    if (x.size() < 2) throw UsageError("t_test_one_sample: need n >= 2");
    const double n = static_cast<double>(x.size());
    const double mean = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double var = ss / (n - 1.0);
    if (var <= 0.0) throw UsageError("t_test_one_sample: zero sample variance");
    const double t = (mean - mu0) / std::sqrt(var / n);
    TestResult r;
    r.statistic = t;
    r.p_value = clamp01(2.0 * (1.0 - student_t_cdf(std::fabs(t), n - 1.0)));
    r.n = x.size();
    return r;
}

TestResult chi_square_gof(std::span<const long> observed,
                          std::span<const double> expected_probs) {
    if (observed.size() != expected_probs.size() || observed.size() < 2)
        throw UsageError("chi_square_gof: need matching sizes >= 2");
    long total = 0;
    for (long o : observed) total += o;
    if (total <= 0) throw UsageError("chi_square_gof: empty counts");
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = expected_probs[i] * static_cast<double>(total);
        if (e <= 0.0) throw UsageError("chi_square_gof: zero expected cell");
        const double diff = static_cast<double>(observed[i]) - e;
        stat += diff * diff / e;
    }
    TestResult r;
    r.statistic = stat;
    r.p_value = chi_square_sf(stat, static_cast<double>(observed.size() - 1));
    r.n = static_cast<std::size_t>(total);
    return r;
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw UsageError("pearson: length mismatch");
    if (x.size() < 3) throw UsageError("pearson: need n >= 3");
    const double n = static_cast<double>(x.size());
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw UsageError("pearson: degenerate variance");
    double r = sxy / std::sqrt(sxx * syy);
    r = std::max(-1.0, std::min(1.0, r));
    CorrelationResult out;
    out.coefficient = r;
    out.n = x.size();
    if (std::fabs(r) >= 1.0) {
        out.p_value = 0.0;
    } else {
        const double t = r * std::sqrt((n - 2.0) / (1.0 - r * r));
        out.p_value = clamp01(2.0 * (1.0 - student_t_cdf(std::fabs(t), n - 2.0)));
    }
    return out;
}

std::vector<double> average_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw UsageError("spearman: length mismatch");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

PcaResult pca(const Eigen::MatrixXd& data, int k) {
    const Eigen::Index n = data.rows(), d = data.cols();
    if (k < 1 || k > std::min(n, d))
        throw UsageError("pca: k out of range");
    Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    PcaResult out;
    out.components = svd.matrixV().leftCols(k);
    // sign convention: largest-magnitude loading is positive
    for (int c = 0; c < k; ++c) {
        Eigen::Index idx;
        out.components.col(c).cwiseAbs().maxCoeff(&idx);
        if (out.components(idx, c) < 0.0) out.components.col(c) *= -1.0;
    }
    out.explained_variance = svd.singularValues().head(k).array().square() /
                             std::max<double>(1.0, static_cast<double>(n - 1));
    out.projections = centered * out.components;
    return out;
}

namespace {

KmeansResult kmeans_once(const Eigen::MatrixXd& data, int k, Rng& rng,
                         int max_iter) {
    const Eigen::Index n = data.rows();
    Eigen::MatrixXd centroids(k, data.cols());

    // k-means++ seeding
    centroids.row(0) = data.row(static_cast<Eigen::Index>(
        rng.uniform_int(static_cast<std::uint64_t>(n))));
    Eigen::VectorXd d2 =
        (data.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (u <= acc) {
                    pick = i;
                    break;
                }
                pick = i;
            }
        } else {
            pick = static_cast<Eigen::Index>(
                rng.uniform_int(static_cast<std::uint64_t>(n)));
        }
        centroids.row(c) = data.row(pick);
        d2 = d2.cwiseMin(
            (data.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> assign(n, -1);
    double inertia = 0.0;
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (data.row(i) - centroids.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double dist = (data.row(i) - centroids.row(c)).squaredNorm();
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
            inertia += best_d;
        }
        if (!changed && iter > 0) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
        std::vector<long> counts(k, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(assign[i]) += data.row(i);
            ++counts[assign[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
            } else {
                // re-seed an empty cluster at the point farthest from its centroid
                Eigen::Index far = 0;
                double far_d = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double dist =
                        (data.row(i) - centroids.row(assign[i])).squaredNorm();
                    if (dist > far_d) {
                        far_d = dist;
                        far = i;
                    }
                }
                centroids.row(c) = data.row(far);
            }
        }
    }

    KmeansResult out;
    out.assignments = std::move(assign);
    out.centroids = std::move(centroids);
    out.inertia = inertia;
    return out;
}

}  // namespace

KmeansResult kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                    int max_iter, int restarts) {
    if (k < 1 || k > data.rows()) throw UsageError("kmeans: k out of range");
    Rng root(seed);
    KmeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        Rng stream = root.split("kmeans", static_cast<std::uint64_t>(r));
        KmeansResult cand = kmeans_once(data, k, stream, max_iter);
        if (cand.inertia < best.inertia) best = std::move(cand);
    }
    return best;
}

}  // namespace vispol::stats
