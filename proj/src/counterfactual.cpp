#include "vispol/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "vispol/errors.hpp"
#include "vispol/stats.hpp"

namespace vispol {

using nlohmann::json;

ImageVector pi0(const ImageVector& z) {
    ImageVector out = z;
    out.t = 0;
    return out;
}

ImageVector pi1(const ImageVector& z) {
    ImageVector out = z;
    out.t = 1;
    return out;
}

ImageVector noisy_pi1(const ImageVector& z, double sigma, Rng& rng,
                      double drift) {
    if (sigma < 0.0) throw UsageError("noisy_pi1: sigma must be >= 0");
    ImageVector out = pi1(z);
    for (Eigen::Index i = 0; i < out.z_minus_t.size(); ++i)
        out.z_minus_t(i) += drift + sigma * rng.normal();
    return out;
}

CounterfactualValidation validate_counterfactual_set(
    const std::vector<ImageVector>& originals,
    const std::vector<ImageVector>& generated, double flag_threshold,
    int n_coords) {
    if (originals.empty() || generated.empty())
        throw UsageError("validate_counterfactual_set: empty input");
    const int dim = static_cast<int>(originals.front().z_minus_t.size());
    const int checked = n_coords < 0 ? dim : std::min(n_coords, dim);

    CounterfactualValidation out;
    std::vector<double> a(originals.size()), b(generated.size());
    for (int c = 0; c < checked; ++c) {
        for (std::size_t i = 0; i < originals.size(); ++i)
            a[i] = originals[i].z_minus_t(c);
        for (std::size_t i = 0; i < generated.size(); ++i)
            b[i] = generated[i].z_minus_t(c);
        const auto ks = stats::ks_two_sample(a, b);
        KsCoordinateReport rep;
        rep.coordinate = c;
        rep.statistic = ks.statistic;
        rep.p_value = ks.p_value;
        rep.flagged = ks.p_value < flag_threshold;
        out.any_flagged = out.any_flagged || rep.flagged;
        out.coordinates.push_back(rep);
    }
    return out;
}

StyleStats StyleStats::estimate(const Dataset& reference, int n_nuisance) {
    StyleStats out;
    out.n_nuisance = n_nuisance;
    std::map<int, std::vector<const ArticleRecord*>> by_event;
    for (const auto& rec : reference) by_event[rec.context.event_id].push_back(&rec);
    for (const auto& [event, recs] : by_event) {
        const int n_style =
            static_cast<int>(recs.front()->image.z_minus_t.size()) - n_nuisance;
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(n_style);
        for (const auto* r : recs)
            mean += r->image.z_minus_t.tail(n_style);
        mean /= static_cast<double>(recs.size());
        Eigen::VectorXd var = Eigen::VectorXd::Zero(n_style);
        for (const auto* r : recs) {
            const Eigen::VectorXd d = r->image.z_minus_t.tail(n_style) - mean;
            var += d.cwiseProduct(d);
        }
        var /= std::max<double>(1.0, static_cast<double>(recs.size() - 1));
        out.mean[event] = mean;
        out.sd[event] = var.cwiseSqrt();
    }
    return out;
}

bool StyleStats::within(const ArticleRecord& rec, double z_max) const {
    auto mit = mean.find(rec.context.event_id);
    if (mit == mean.end()) return false;
    const Eigen::VectorXd& m = mit->second;
    const Eigen::VectorXd& s = sd.at(rec.context.event_id);
    const int n_style = static_cast<int>(m.size());
    if (n_style == 0) return true;
    const Eigen::VectorXd style = rec.image.z_minus_t.tail(n_style);
    for (int c = 0; c < n_style; ++c) {
        const double scale = s(c) > 0.0 ? s(c) : 1.0;
        if (std::fabs(style(c) - m(c)) > z_max * scale) return false;
    }
    return true;
}

std::vector<CounterfactualSet> build_counterfactual_sets(
    const Dataset& test, const StyleStats& style, int pairs_per_politician,
    double style_z_max) {
    if (pairs_per_politician < 1)
        throw UsageError("build_counterfactual_sets: need S >= 1");

    std::map<int, std::vector<const ArticleRecord*>> eligible;
    std::map<int, std::vector<const ArticleRecord*>> fallback;
    for (const auto& rec : test) {
        if (rec.image.t != 0) continue;
        fallback[rec.politician_id].push_back(&rec);
        if (style.within(rec, style_z_max))
            eligible[rec.politician_id].push_back(&rec);
    }

    std::vector<CounterfactualSet> out;
    for (auto& [pid, recs] : fallback) {
        auto it = eligible.find(pid);
        std::vector<const ArticleRecord*>& pool =
            (it != eligible.end() && !it->second.empty()) ? it->second : recs;
        std::sort(pool.begin(), pool.end(),
                  [](const ArticleRecord* a, const ArticleRecord* b) {
                      return a->record_id < b->record_id;
                  });
        CounterfactualSet set;
        set.politician_id = pid;
        const int take =
            std::min<int>(pairs_per_politician, static_cast<int>(pool.size()));
        for (int i = 0; i < take; ++i) {
            CounterfactualPair pair;
            pair.z0 = pi0(pool[i]->image);
            pair.z1 = pi1(pool[i]->image);
            set.pairs.push_back(std::move(pair));
        }
        if (!set.pairs.empty()) out.push_back(std::move(set));
    }
    return out;
}

namespace {

json image_to_json(const ImageVector& z) {
    json j;
    j["t"] = z.t;
    json v = json::array();
    for (Eigen::Index i = 0; i < z.z_minus_t.size(); ++i)
        v.push_back(z.z_minus_t(i));
    j["z_minus_t"] = std::move(v);
    return j;
}

ImageVector image_from_json(const json& j) {
    ImageVector z;
    z.t = j.at("t").get<int>();
    const json& v = j.at("z_minus_t");
    z.z_minus_t.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) z.z_minus_t(i) = v[i].get<double>();
    return z;
}

}  // namespace

json CounterfactualSet::to_json() const {
    json j;
    j["politician_id"] = politician_id;
    j["pairs"] = json::array();
    for (const auto& p : pairs)
        j["pairs"].push_back(
            {{"z0", image_to_json(p.z0)}, {"z1", image_to_json(p.z1)}});
    return j;
}

CounterfactualSet CounterfactualSet::from_json(const json& j) {
    CounterfactualSet set;
    set.politician_id = j.at("politician_id").get<int>();
    for (const json& pj : j.at("pairs")) {
        CounterfactualPair p;
        p.z0 = image_from_json(pj.at("z0"));
        p.z1 = image_from_json(pj.at("z1"));
        set.pairs.push_back(std::move(p));
    }
    return set;
}

}  // namespace vispol
