#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vispol/ecosystem.hpp"
#include "vispol/rng.hpp"

namespace vispol {

// A treated/control image pair holding everything but the focal feature
// fixed, coordinate for coordinate.
struct CounterfactualPair {
    ImageVector z0;  // t = 0
    ImageVector z1;  // t = 1
};

struct CounterfactualSet {
    int politician_id = 0;
    std::vector<CounterfactualPair> pairs;

    static CounterfactualSet from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Feature-off operator: t = 0, z_minus_t untouched. Idempotent.
ImageVector pi0(const ImageVector& z);

// Feature-on operator: t = 1, z_minus_t untouched. Idempotent.
ImageVector pi1(const ImageVector& z);

// Imperfect editor: t = 1 and z_minus_t perturbed by N(drift, sigma^2) per
// coordinate. Only used to exercise the validation's power.
ImageVector noisy_pi1(const ImageVector& z, double sigma, Rng& rng,
                      double drift = 0.0);

struct KsCoordinateReport {
    int coordinate = 0;
    double statistic = 0.0;
    double p_value = 1.0;
    bool flagged = false;
};

struct CounterfactualValidation {
    std::vector<KsCoordinateReport> coordinates;
    bool any_flagged = false;
};

// Per-coordinate two-sample K-S between originals and generated images.
// Coordinates with p < flag_threshold are flagged. Validates the first
// n_coords coordinates (all of z_minus_t when n_coords < 0).
CounterfactualValidation validate_counterfactual_set(
    const std::vector<ImageVector>& originals,
    const std::vector<ImageVector>& generated, double flag_threshold = 0.05,
    int n_coords = -1);

// Per-event-cluster mean and standard deviation of the style coordinates,
// estimated from a reference (training) sample.
struct StyleStats {
    int n_nuisance = 0;
    std::map<int, Eigen::VectorXd> mean;  // event_id -> style mean
    std::map<int, Eigen::VectorXd> sd;    // event_id -> style sd

    static StyleStats estimate(const Dataset& reference, int n_nuisance);
    // True when the record's style coordinates are within z_max standard
    // deviations of its cluster mean (unknown clusters never qualify).
    bool within(const ArticleRecord& rec, double z_max) const;
};

// Builds one counterfactual set per politician from neutral held-out images:
// t = 0 test records whose style coordinates lie within 2 sd of their cluster
// mean (estimated on the training split). Candidates are taken in record-id
// order; politicians with no eligible source image are skipped.
std::vector<CounterfactualSet> build_counterfactual_sets(
    const Dataset& test, const StyleStats& style, int pairs_per_politician,
    double style_z_max = 2.0);

}  // namespace vispol
