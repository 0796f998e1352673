#pragma once

#include <vector>

#include "vispol/ecosystem.hpp"

namespace vispol::testing {

// Minimal two-outlet world: outlet 0 neutral, outlet 1 slanted.
inline Ecosystem two_outlet_ecosystem(double slant_rep = 0.4,
                                      double slant_dem = -0.4) {
    Ecosystem eco;
    eco.topic_alpha = Eigen::VectorXd::Ones(3);
    eco.n_clusters = 1;
    eco.n_nuisance = 2;
    eco.cluster_style_means = Eigen::MatrixXd::Zero(1, 1);
    eco.style_sigma = 0.5;
    eco.n_dates = 2;
    eco.neutral_outlet_id = 0;

    eco.politicians.push_back({0, Affiliation::Rep, 0.5});
    eco.politicians.push_back({1, Affiliation::Dem, 0.5});

    for (int id = 0; id < 2; ++id) {
        OutletUtilitySpec o;
        o.outlet_id = id;
        o.gamma = Eigen::VectorXd::Zero(eco.d_z());
        o.delta = Eigen::VectorXd::Zero(eco.n_topics());
        if (id == 1) {
            o.slant_rep = slant_rep;
            o.slant_dem = slant_dem;
        }
        eco.outlets.push_back(std::move(o));
    }
    return eco;
}

// Richer world used by recovery and separation tests: `n_outlets` outlets
// (0 = neutral) with alternating-sign slants, half Rep / half Dem
// politicians, topic and image weights that actually move outlet choice.
inline Ecosystem slanted_ecosystem(int n_outlets = 4, int n_politicians = 6,
                                   double max_slant = 0.6, double kappa = 0.0) {
    Ecosystem eco;
    eco.topic_alpha = Eigen::VectorXd::Constant(4, 1.0);
    eco.n_clusters = 3;
    eco.n_nuisance = 2;
    eco.cluster_style_means.resize(3, 2);
    eco.cluster_style_means << 0.0, 0.0, 1.5, -1.0, -1.0, 1.5;
    eco.style_sigma = 0.6;
    eco.kappa = kappa;
    eco.n_dates = 3;
    eco.neutral_outlet_id = 0;

    for (int p = 0; p < n_politicians; ++p)
        eco.politicians.push_back(
            {p, p % 2 == 0 ? Affiliation::Rep : Affiliation::Dem, 0.5});

    for (int id = 0; id < n_outlets; ++id) {
        OutletUtilitySpec o;
        o.outlet_id = id;
        o.alpha = 0.1 * (id % 3);
        o.gamma = Eigen::VectorXd::Zero(eco.d_z());
        o.delta = Eigen::VectorXd::Zero(eco.n_topics());
        if (id != 0) {
            // alternate leaning; magnitude varies by outlet
            const double sgn = id % 2 == 1 ? 1.0 : -1.0;
            const double mag = max_slant * (0.5 + 0.5 * ((id % 3) / 2.0));
            o.slant_rep = sgn * mag;
            o.slant_dem = -sgn * mag;
            o.gamma(0) = 0.2 * sgn;
            o.gamma(eco.n_nuisance) = 0.15 * sgn;
            o.delta(id % eco.n_topics()) = 0.4;
            for (int p = 0; p < n_politicians; ++p)
                o.politician_affinity[p] = 0.1 * ((p + id) % 3 - 1);
        }
        eco.outlets.push_back(std::move(o));
    }
    return eco;
}

}  // namespace vispol::testing
