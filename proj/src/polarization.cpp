#include "vispol/polarization.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vispol/errors.hpp"
#include "vispol/format.hpp"
#include "vispol/stats.hpp"

namespace vispol {

int OutletScorer::class_index(int outlet_id) const {
    const auto& ids = class_ids();
    auto it = std::lower_bound(ids.begin(), ids.end(), outlet_id);
    if (it == ids.end() || *it != outlet_id)
        throw UsageError("scorer does not cover outlet " +
                         std::to_string(outlet_id));
    return static_cast<int>(it - ids.begin());
}

OracleScorer::OracleScorer(const Ecosystem& eco) : eco_(&eco) {
    ids_ = eco.outlet_ids();
    std::sort(ids_.begin(), ids_.end());
}

Eigen::VectorXd OracleScorer::logits(const ImageVector& z,
                                     const ArticleContext& x,
                                     int politician_id) const {
    const auto& p = eco_->politician(politician_id);
    Eigen::VectorXd u(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i)
        u(i) = utility(z, x, p, eco_->outlet(ids_[i]));
    return u;
}

double article_level_rho(const OutletScorer& scorer,
                         const CounterfactualSet& pairs,
                         const ArticleContext& x_j, int politician_id, int y_k,
                         int y_0) {
    if (y_k == y_0) throw UsageError("article_level_rho: y_k equals baseline");
    if (pairs.pairs.empty()) throw UsageError("article_level_rho: empty set");
    const int ik = scorer.class_index(y_k);
    const int i0 = scorer.class_index(y_0);
    double sum = 0.0;
    for (const auto& pair : pairs.pairs) {
        const Eigen::VectorXd l1 = scorer.logits(pair.z1, x_j, politician_id);
        const Eigen::VectorXd l0 = scorer.logits(pair.z0, x_j, politician_id);
        sum += (l1(ik) - l1(i0)) - (l0(ik) - l0(i0));
    }
    return sum / static_cast<double>(pairs.pairs.size());
}

RhoEstimate aggregate_rho(std::vector<double> article_values, int politician_id,
                          int outlet_id, int baseline_outlet_id) {
    if (article_values.empty())
        throw UsageError("aggregate_rho: no articles for politician " +
                         std::to_string(politician_id));
    RhoEstimate est;
    est.politician_id = politician_id;
    est.outlet_id = outlet_id;
    est.baseline_outlet_id = baseline_outlet_id;
    est.n_articles = article_values.size();
    double sum = 0.0;
    for (double v : article_values) sum += v;
    est.value = sum / static_cast<double>(article_values.size());
    est.article_values = std::move(article_values);
    return est;
}

double PolarizationReport::slant(int politician_id, int outlet_id) const {
    auto it = rho.find({politician_id, outlet_id});
    if (it == rho.end())
        throw UsageError("no estimate for (politician " +
                         std::to_string(politician_id) + ", outlet " +
                         std::to_string(outlet_id) + ")");
    return it->second.value;
}

double PolarizationReport::pairwise_polarization(int politician_id, int y1,
                                                 int y2) const {
    return slant(politician_id, y1) - slant(politician_id, y2);
}

double cvs(const PolarizationReport& report, int outlet_id) {
    double rep_sum = 0.0, dem_sum = 0.0;
    long rep_n = 0, dem_n = 0;
    for (int pid : report.politician_ids) {
        const double s = report.slant(pid, outlet_id);
        if (report.affiliations.at(pid) == Affiliation::Rep) {
            rep_sum += s;
            ++rep_n;
        } else {
            dem_sum += s;
            ++dem_n;
        }
    }
    if (rep_n == 0 || dem_n == 0)
        throw UsageError("cvs: empty affiliation group");
    return rep_sum / rep_n - dem_sum / dem_n;
}

double ovp(const PolarizationReport& report, int politician_id,
           bool include_baseline) {
    std::vector<double> slants;
    for (int y : report.outlet_ids) {
        if (!include_baseline && y == report.baseline_outlet_id) continue;
        slants.push_back(report.slant(politician_id, y));
    }
    if (slants.size() < 2) throw UsageError("ovp: need at least 2 outlets");
    double mu = 0.0;
    for (double s : slants) mu += s;
    mu /= static_cast<double>(slants.size());
    double ss = 0.0;
    for (double s : slants) ss += (s - mu) * (s - mu);
    return std::sqrt(ss / static_cast<double>(slants.size()));
}

PolarizationReport measure_polarization(const Dataset& test,
                                        const OutletScorer& scorer,
                                        const std::vector<CounterfactualSet>& sets,
                                        const std::map<int, Affiliation>& affil,
                                        const MeasurementOptions& opt) {
    if (test.empty()) throw UsageError("measure_polarization: empty test set");

    PolarizationReport rep;
    rep.baseline_outlet_id = opt.baseline_outlet_id;
    rep.outlet_ids = scorer.class_ids();
    rep.affiliations = affil;
    scorer.class_index(opt.baseline_outlet_id);  // must be covered

    std::map<int, const CounterfactualSet*> set_by_pid;
    for (const auto& s : sets) set_by_pid[s.politician_id] = &s;

    std::map<int, std::vector<const ArticleRecord*>> articles_by_pid;
    for (const auto& r : test) articles_by_pid[r.politician_id].push_back(&r);
    for (auto& [pid, recs] : articles_by_pid)
        std::sort(recs.begin(), recs.end(),
                  [](const ArticleRecord* a, const ArticleRecord* b) {
                      return a->record_id < b->record_id;
                  });

    for (const auto& [pid, aff] : affil) {
        auto sit = set_by_pid.find(pid);
        auto ait = articles_by_pid.find(pid);
        if (sit == set_by_pid.end() || ait == articles_by_pid.end()) {
            rep.missing_politicians.push_back(pid);
            continue;
        }
        rep.politician_ids.push_back(pid);
        for (int yk : rep.outlet_ids) {
            if (yk == opt.baseline_outlet_id) {
                // zero by construction
                std::vector<double> zeros(ait->second.size(), 0.0);
                rep.rho[{pid, yk}] =
                    aggregate_rho(std::move(zeros), pid, yk, yk);
                continue;
            }
            std::vector<double> values;
            values.reserve(ait->second.size());
            for (const ArticleRecord* art : ait->second) {
                if (opt.condition_on_outlet && art->outlet_id != yk) continue;
                values.push_back(article_level_rho(scorer, *sit->second,
                                                   art->context, pid, yk,
                                                   opt.baseline_outlet_id));
            }
            if (values.empty()) continue;  // reported missing below
            rep.rho[{pid, yk}] = aggregate_rho(std::move(values), pid, yk,
                                               opt.baseline_outlet_id);
        }
    }
    std::sort(rep.politician_ids.begin(), rep.politician_ids.end());
    std::sort(rep.missing_politicians.begin(), rep.missing_politicians.end());

    for (int y : rep.outlet_ids) rep.cvs_per_outlet[y] = cvs(rep, y);
    for (int pid : rep.politician_ids)
        rep.ovp_per_politician[pid] = ovp(rep, pid, opt.ovp_include_baseline);

    // outlet groups for the distribution summaries
    if (!opt.rep_outlets.empty() || !opt.dem_outlets.empty()) {
        rep.rep_outlets.insert(opt.rep_outlets.begin(), opt.rep_outlets.end());
        rep.dem_outlets.insert(opt.dem_outlets.begin(), opt.dem_outlets.end());
    } else {
        for (int y : rep.outlet_ids) {
            if (y == opt.baseline_outlet_id) continue;
            (rep.cvs_per_outlet[y] >= 0.0 ? rep.rep_outlets : rep.dem_outlets)
                .insert(y);
        }
    }
    for (Affiliation pg : {Affiliation::Rep, Affiliation::Dem}) {
        for (const auto& [name, group] :
             {std::pair{std::string("rep"), &rep.rep_outlets},
              std::pair{std::string("dem"), &rep.dem_outlets}}) {
            GroupDistribution dist;
            dist.politician_group = pg;
            dist.outlet_group = name;
            for (int pid : rep.politician_ids) {
                if (rep.affiliations.at(pid) != pg) continue;
                for (int y : *group) {
                    auto it = rep.rho.find({pid, y});
                    if (it == rep.rho.end()) continue;
                    dist.values.insert(dist.values.end(),
                                       it->second.article_values.begin(),
                                       it->second.article_values.end());
                }
            }
            rep.groups.push_back(std::move(dist));
        }
    }
    return rep;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    return Rng(seed).split(label).next_u64();
}

PipelineResult run_pipeline(const Dataset& full,
                            const std::map<int, Affiliation>& affil,
                            const FeatureSpace& space, const PipelineConfig& cfg) {
    PipelineResult out;
    auto [train_set, test_set] =
        split_train_test(full, cfg.measure.train_frac, cfg.measure.strata,
                         derive_seed(cfg.seed, "split"));
    if (test_set.empty())
        throw UsageError("run_pipeline: empty test split");
    out.train_set = std::move(train_set);
    out.test_set = std::move(test_set);

    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train");
    out.model = train(out.train_set, space, cfg.model, tc);

    const StyleStats style =
        StyleStats::estimate(out.train_set, cfg.measure.n_nuisance);
    out.sets = build_counterfactual_sets(out.test_set, style,
                                         cfg.measure.pairs_per_politician,
                                         cfg.measure.style_z_max);

    ModelScorer scorer(out.model);
    out.report =
        measure_polarization(out.test_set, scorer, out.sets, affil, cfg.measure);
    return out;
}

std::string rho_csv(const PolarizationReport& r) {
    std::ostringstream os;
    os << "politician_id,outlet_id,baseline_outlet_id,rho,n_articles\n";
    for (const auto& [key, est] : r.rho)
        os << key.first << ',' << key.second << ',' << est.baseline_outlet_id
           << ',' << format_num(est.value) << ',' << est.n_articles << '\n';
    return os.str();
}

std::string slant_csv(const PolarizationReport& r) {
    std::ostringstream os;
    os << "politician_id,outlet_id,slant\n";
    for (const auto& [key, est] : r.rho)
        os << key.first << ',' << key.second << ',' << format_num(est.value)
           << '\n';
    return os.str();
}

std::string cvs_csv(const PolarizationReport& r) {
    std::ostringstream os;
    os << "outlet_id,cvs\n";
    for (const auto& [y, v] : r.cvs_per_outlet)
        os << y << ',' << format_num(v) << '\n';
    return os.str();
}

std::string ovp_csv(const PolarizationReport& r) {
    std::ostringstream os;
    os << "politician_id,ovp\n";
    for (const auto& [pid, v] : r.ovp_per_politician)
        os << pid << ',' << format_num(v) << '\n';
    return os.str();
}

std::string article_values_json(const PolarizationReport& r) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [key, est] : r.rho) {
        nlohmann::json e;
        e["politician_id"] = key.first;
        e["outlet_id"] = key.second;
        e["baseline_outlet_id"] = est.baseline_outlet_id;
        e["value"] = est.value;
        e["article_values"] = est.article_values;
        j.push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

namespace {

struct Moments {
    std::size_t n = 0;
    double mean = 0.0, sd = 0.0, min = 0.0, max = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    m.n = v.size();
    if (v.empty()) return m;
    m.min = *std::min_element(v.begin(), v.end());
    m.max = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    m.mean = s / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return m;
}

const std::vector<double>* find_group(const PolarizationReport& r,
                                      Affiliation pg,
                                      const std::string& outlet_group) {
    for (const auto& g : r.groups)
        if (g.politician_group == pg && g.outlet_group == outlet_group)
            return &g.values;
    return nullptr;
}

}  // namespace

std::string summary_markdown(const PolarizationReport& r,
                             const std::map<std::pair<int, int>, double>*
                                 true_slant) {
    std::ostringstream os;
    os << "# Polarization measurement summary\n\n";
    os << "Baseline outlet: " << r.baseline_outlet_id << "\n\n";

    os << "## Slant table (rho vs baseline)\n\n";
    os << "| politician | outlet | slant | n articles |\n";
    os << "|---|---|---|---|\n";
    for (const auto& [key, est] : r.rho)
        os << "| " << key.first << " | " << key.second << " | "
           << format_num(est.value) << " | " << est.n_articles << " |\n";
    os << "\n## CVS per outlet\n\n| outlet | CVS |\n|---|---|\n";
    for (const auto& [y, v] : r.cvs_per_outlet)
        os << "| " << y << " | " << format_num(v) << " |\n";
    os << "\n## OVP per politician\n\n| politician | OVP |\n|---|---|\n";
    for (const auto& [pid, v] : r.ovp_per_politician)
        os << "| " << pid << " | " << format_num(v) << " |\n";

    os << "\n## Article-level slant distributions by group\n\n";
    os << "| politician group | outlet group | n | mean | sd | min | max |\n";
    os << "|---|---|---|---|---|---|---|\n";
    for (const auto& g : r.groups) {
        const Moments m = moments(g.values);
        os << "| " << to_string(g.politician_group) << " | " << g.outlet_group
           << " | " << m.n << " | " << format_num(m.mean) << " | "
           << format_num(m.sd) << " | " << format_num(m.min) << " | "
           << format_num(m.max) << " |\n";
    }

    // separation test between outlet groups for each politician side
    for (Affiliation pg : {Affiliation::Rep, Affiliation::Dem}) {
        const auto* a = find_group(r, pg, "rep");
        const auto* b = find_group(r, pg, "dem");
        if (a && b && !a->empty() && !b->empty()) {
            const auto ks = stats::ks_two_sample(*a, *b);
            os << "\nK-S (" << to_string(pg)
               << " politicians, rep vs dem outlets): statistic "
               << format_num(ks.statistic) << ", p " << format_num(ks.p_value)
               << "\n";
        }
    }

    if (true_slant) {
        double max_err = 0.0;
        for (const auto& [key, est] : r.rho) {
            auto it = true_slant->find(key);
            if (it != true_slant->end())
                max_err = std::max(max_err, std::fabs(est.value - it->second));
        }
        os << "\n## Ground-truth recovery\n\nmax |rho_hat - rho_true| = "
           << format_num(max_err) << "\n";
    }
    if (!r.missing_politicians.empty()) {
        os << "\nPoliticians without estimates:";
        for (int pid : r.missing_politicians) os << ' ' << pid;
        os << "\n";
    }
    return os.str();
}

}  // namespace vispol
