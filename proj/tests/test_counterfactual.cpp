#include <cmath>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "fixtures.hpp"
#include "vispol/counterfactual.hpp"
#include "vispol/errors.hpp"

using namespace vispol;
using vispol::testing::slanted_ecosystem;

namespace {

ImageVector make_image(int t, std::initializer_list<double> coords) {
    ImageVector z;
    z.t = t;
    z.z_minus_t.resize(static_cast<Eigen::Index>(coords.size()));
    int i = 0;
    for (double c : coords) z.z_minus_t(i++) = c;
    return z;
}

}  // namespace

TEST_CASE("pi0/pi1 toggle only the focal feature and are idempotent") {
    const ImageVector z = make_image(1, {0.2, -1.0});

    const ImageVector off = pi0(z);
    CHECK(off.t == 0);
    CHECK(off.z_minus_t == z.z_minus_t);
    CHECK(pi0(off) == off);

    const ImageVector neutral = make_image(0, {3.0});
    CHECK(pi0(neutral) == neutral);
    CHECK(pi1(pi1(z)) == pi1(z));
    CHECK(pi1(z) == z);  // already on

    CHECK(pi1(pi0(z)).z_minus_t == z.z_minus_t);
}

TEST_CASE("noisy_pi1 perturbs with zero-mean noise") {
    const ImageVector z = make_image(0, {1.0, 2.0, 3.0});
    Rng rng(4);
    CHECK(noisy_pi1(z, 0.0, rng) == pi1(z));

    const ImageVector jittered = noisy_pi1(z, 0.5, rng);
    CHECK(jittered.t == 1);
    CHECK(jittered.z_minus_t != z.z_minus_t);

    const int n = 10000;
    Eigen::VectorXd mean_disp = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < n; ++i)
        mean_disp += noisy_pi1(z, 0.5, rng).z_minus_t - z.z_minus_t;
    mean_disp /= static_cast<double>(n);
    const double se = 0.5 / std::sqrt(static_cast<double>(n));
    for (int c = 0; c < 3; ++c) CHECK(std::fabs(mean_disp(c)) < 3.0 * se);

    CHECK_THROWS_AS(noisy_pi1(z, -1.0, rng), UsageError);
}

TEST_CASE("validate_counterfactual_set") {
    Rng rng(21);
    std::vector<ImageVector> originals;
    for (int i = 0; i < 200; ++i) {
        ImageVector z;
        z.t = 0;
        z.z_minus_t = Eigen::VectorXd::NullaryExpr(4, [&](Eigen::Index) {
            return rng.normal();
        });
        originals.push_back(std::move(z));
    }

    std::vector<ImageVector> exact;
    for (const auto& z : originals) exact.push_back(pi1(z));
    const auto clean = validate_counterfactual_set(originals, exact);
    CHECK_FALSE(clean.any_flagged);
    for (const auto& c : clean.coordinates) {
        CHECK(c.statistic == 0.0);
        CHECK_FALSE(c.flagged);
    }

    // drifted generator: every coordinate separates
    std::vector<ImageVector> drifted;
    for (const auto& z : originals)
        drifted.push_back(noisy_pi1(z, 0.5, rng, /*drift=*/2.0));
    const auto dirty = validate_counterfactual_set(originals, drifted);
    CHECK(dirty.any_flagged);
    for (const auto& c : dirty.coordinates) CHECK(c.flagged);

    // only the designated leading coordinates when asked
    const auto partial = validate_counterfactual_set(originals, drifted, 0.05, 2);
    CHECK(partial.coordinates.size() == 2);

    CHECK_THROWS_AS(validate_counterfactual_set({}, exact), UsageError);
}

TEST_CASE("pair invariant holds for built sets; sources are neutral test images") {
    const Ecosystem eco = slanted_ecosystem();
    Rng rng(31);
    const Dataset data = generate_dataset(eco, 4000, rng);
    const Dataset train(data.begin(), data.begin() + 3000);
    const Dataset test(data.begin() + 3000, data.end());

    const StyleStats style = StyleStats::estimate(train, eco.n_nuisance);
    const auto sets = build_counterfactual_sets(test, style, 3);
    CHECK(sets.size() == eco.politicians.size());
    for (const auto& set : sets) {
        CHECK(set.pairs.size() == 3);
        for (const auto& pair : set.pairs) {
            CHECK(pair.z0.t == 0);
            CHECK(pair.z1.t == 1);
            CHECK(pair.z0.z_minus_t == pair.z1.z_minus_t);
        }
        // sources are genuine neutral test images of this politician
        for (const auto& pair : set.pairs) {
            bool found = false;
            for (const auto& rec : test)
                if (rec.politician_id == set.politician_id && rec.image.t == 0 &&
                    rec.image.z_minus_t == pair.z0.z_minus_t)
                    found = true;
            CHECK(found);
        }
    }

    // serialization round trip
    const auto j = sets.front().to_json();
    const auto back = CounterfactualSet::from_json(j);
    CHECK(back.politician_id == sets.front().politician_id);
    REQUIRE(back.pairs.size() == sets.front().pairs.size());
    CHECK(back.pairs[0].z0 == sets.front().pairs[0].z0);
    CHECK(back.pairs[0].z1 == sets.front().pairs[0].z1);
}
