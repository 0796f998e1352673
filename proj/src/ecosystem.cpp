#include "vispol/ecosystem.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vispol/errors.hpp"

namespace vispol {

using nlohmann::json;

std::string to_string(Affiliation a) {
    return a == Affiliation::Rep ? "Rep" : "Dem";
}

Affiliation affiliation_from_string(const std::string& s) {
    if (s == "Rep") return Affiliation::Rep;
    if (s == "Dem") return Affiliation::Dem;
    throw ConfigError("unknown affiliation: " + s);
}

const OutletUtilitySpec& Ecosystem::outlet(int id) const {
    for (const auto& o : outlets)
        if (o.outlet_id == id) return o;
    throw ConfigError("unknown outlet id " + std::to_string(id));
}

const Politician& Ecosystem::politician(int id) const {
    for (const auto& p : politicians)
        if (p.id == id) return p;
    throw ConfigError("unknown politician id " + std::to_string(id));
}

int Ecosystem::outlet_index(int id) const {
    for (std::size_t i = 0; i < outlets.size(); ++i)
        if (outlets[i].outlet_id == id) return static_cast<int>(i);
    throw ConfigError("unknown outlet id " + std::to_string(id));
}

std::vector<int> Ecosystem::outlet_ids() const {
    std::vector<int> ids;
    ids.reserve(outlets.size());
    for (const auto& o : outlets) ids.push_back(o.outlet_id);
    return ids;
}

void Ecosystem::validate() const {
    if (outlets.size() < 2) throw ConfigError("need at least 2 outlets");
    if (topic_alpha.size() < 1) throw ConfigError("topic_alpha is empty");
    if ((topic_alpha.array() <= 0.0).any())
        throw ConfigError("topic_alpha entries must be positive");
    if (n_clusters < 1 || cluster_style_means.rows() != n_clusters)
        throw ConfigError("cluster_style_means must have n_clusters rows");
    if (n_nuisance < 0) throw ConfigError("n_nuisance must be >= 0");
    if (n_dates < 1) throw ConfigError("n_dates must be >= 1");
    if (style_sigma < 0.0) throw ConfigError("style_sigma must be >= 0");

    std::set<int> outlet_seen;
    bool neutral_found = false;
    for (const auto& o : outlets) {
        if (!outlet_seen.insert(o.outlet_id).second)
            throw ConfigError("duplicate outlet id " + std::to_string(o.outlet_id));
        if (o.gamma.size() != d_z())
            throw ConfigError("outlet " + std::to_string(o.outlet_id) +
                              ": gamma length != d_z");
        if (o.delta.size() != n_topics())
            throw ConfigError("outlet " + std::to_string(o.outlet_id) +
                              ": delta length != n_topics");
        if (o.t_topic_interaction.size() != 0 &&
            o.t_topic_interaction.size() != n_topics())
            throw ConfigError("outlet " + std::to_string(o.outlet_id) +
                              ": t_topic_interaction length != n_topics");
        if (o.outlet_id == neutral_outlet_id) {
            neutral_found = true;
            if (o.slant_dem != 0.0 || o.slant_rep != 0.0)
                throw ConfigError("neutral outlet must have zero slant");
        }
    }
    if (!neutral_found) throw ConfigError("neutral_outlet_id not among outlets");

    std::set<int> pol_seen;
    bool has_dem = false, has_rep = false;
    for (const auto& p : politicians) {
        if (!pol_seen.insert(p.id).second)
            throw ConfigError("duplicate politician id " + std::to_string(p.id));
        if (p.smile_prob < 0.0 || p.smile_prob > 1.0)
            throw ConfigError("smile_prob out of [0,1]");
        (p.affiliation == Affiliation::Dem ? has_dem : has_rep) = true;
    }
    if (!has_dem || !has_rep)
        throw ConfigError("need at least one politician per affiliation");
}

namespace {

Eigen::VectorXd vec_from_json(const json& j) {
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

json vec_to_json(const Eigen::VectorXd& v) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

const json& require(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end())
        throw ConfigError(std::string("missing config key: ") + key);
    return *it;
}

}  // namespace

Ecosystem Ecosystem::from_json(const json& j) {
    Ecosystem eco;
    eco.topic_alpha = vec_from_json(require(j, "topic_alpha"));
    eco.neutral_outlet_id = require(j, "neutral_outlet_id").get<int>();
    eco.n_clusters = j.value("n_clusters", 1);
    eco.n_nuisance = j.value("n_nuisance", 1);
    eco.style_sigma = j.value("style_sigma", 0.5);
    eco.kappa = j.value("kappa", 0.0);
    eco.n_dates = j.value("n_dates", 4);
    eco.seed = j.value("seed", std::uint64_t{0});

    if (j.contains("cluster_style_means")) {
        const json& rows = j["cluster_style_means"];
        const int n_rows = static_cast<int>(rows.size());
        const int n_cols = n_rows > 0 ? static_cast<int>(rows[0].size()) : 0;
        eco.cluster_style_means.resize(n_rows, n_cols);
        for (int r = 0; r < n_rows; ++r) {
            if (static_cast<int>(rows[r].size()) != n_cols)
                throw ConfigError("ragged cluster_style_means");
            for (int c = 0; c < n_cols; ++c)
                eco.cluster_style_means(r, c) = rows[r][c].get<double>();
        }
    } else {
        eco.cluster_style_means.resize(eco.n_clusters, 0);
    }

    for (const json& pj : require(j, "politicians")) {
        Politician p;
        p.id = require(pj, "id").get<int>();
        p.affiliation =
            affiliation_from_string(require(pj, "affiliation").get<std::string>());
        p.smile_prob = pj.value("smile_prob", 0.5);
        eco.politicians.push_back(p);
    }

    for (const json& oj : require(j, "outlets")) {
        OutletUtilitySpec o;
        o.outlet_id = require(oj, "outlet_id").get<int>();
        o.alpha = oj.value("alpha", 0.0);
        if (oj.contains("slant")) {
            o.slant_dem = oj["slant"].value("Dem", 0.0);
            o.slant_rep = oj["slant"].value("Rep", 0.0);
        }
        o.gamma = oj.contains("gamma") ? vec_from_json(oj["gamma"])
                                       : Eigen::VectorXd::Zero(eco.d_z());
        o.delta = oj.contains("delta") ? vec_from_json(oj["delta"])
                                       : Eigen::VectorXd::Zero(eco.n_topics());
        if (oj.contains("politician_affinity")) {
            for (auto it = oj["politician_affinity"].begin();
                 it != oj["politician_affinity"].end(); ++it)
                o.politician_affinity[std::stoi(it.key())] = it.value().get<double>();
        }
        if (oj.contains("t_topic_interaction"))
            o.t_topic_interaction = vec_from_json(oj["t_topic_interaction"]);
        eco.outlets.push_back(std::move(o));
    }

    eco.validate();
    return eco;
}

json Ecosystem::to_json() const {
    json j;
    j["topic_alpha"] = vec_to_json(topic_alpha);
    j["neutral_outlet_id"] = neutral_outlet_id;
    j["n_clusters"] = n_clusters;
    j["n_nuisance"] = n_nuisance;
    j["style_sigma"] = style_sigma;
    j["kappa"] = kappa;
    j["n_dates"] = n_dates;
    j["seed"] = seed;
    json rows = json::array();
    for (int r = 0; r < cluster_style_means.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < cluster_style_means.cols(); ++c)
            row.push_back(cluster_style_means(r, c));
        rows.push_back(std::move(row));
    }
    j["cluster_style_means"] = std::move(rows);
    j["politicians"] = json::array();
    for (const auto& p : politicians)
        j["politicians"].push_back({{"id", p.id},
                                    {"affiliation", to_string(p.affiliation)},
                                    {"smile_prob", p.smile_prob}});
    j["outlets"] = json::array();
    for (const auto& o : outlets) {
        json oj;
        oj["outlet_id"] = o.outlet_id;
        oj["alpha"] = o.alpha;
        oj["slant"] = {{"Dem", o.slant_dem}, {"Rep", o.slant_rep}};
        oj["gamma"] = vec_to_json(o.gamma);
        oj["delta"] = vec_to_json(o.delta);
        json aff = json::object();
        for (const auto& [id, v] : o.politician_affinity)
            aff[std::to_string(id)] = v;
        oj["politician_affinity"] = std::move(aff);
        if (o.t_topic_interaction.size() > 0)
            oj["t_topic_interaction"] = vec_to_json(o.t_topic_interaction);
        j["outlets"].push_back(std::move(oj));
    }
    return j;
}

double utility(const ImageVector& z, const ArticleContext& x,
               const Politician& p, const OutletUtilitySpec& spec) {
    if (spec.gamma.size() != z.z_minus_t.size())
        throw ConfigError("utility: gamma/z dimension mismatch");
    if (spec.delta.size() != x.topics.size())
        throw ConfigError("utility: delta/topics dimension mismatch");
    double u = spec.alpha + spec.slant(p.affiliation) * z.t +
               spec.gamma.dot(z.z_minus_t) + spec.delta.dot(x.topics) +
               spec.affinity(p.id);
    if (spec.t_topic_interaction.size() > 0)
        u += z.t * spec.t_topic_interaction.dot(x.topics);
    return u;
}

Eigen::VectorXd utilities(const ImageVector& z, const ArticleContext& x,
                          const Politician& p, const Ecosystem& eco) {
    Eigen::VectorXd u(eco.outlets.size());
    for (std::size_t k = 0; k < eco.outlets.size(); ++k)
        u(k) = utility(z, x, p, eco.outlets[k]);
    return u;
}

int assign_outlet(const ImageVector& z, const ArticleContext& x,
                  const Politician& p, const Ecosystem& eco, Rng& rng) {
    int best_id = eco.outlets.front().outlet_id;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& o : eco.outlets) {
        const double v = utility(z, x, p, o) + sample_gumbel(rng);
        if (v > best || (v == best && o.outlet_id < best_id)) {
            best = v;
            best_id = o.outlet_id;
        }
    }
    return best_id;
}

Eigen::VectorXd sample_topics(const Eigen::VectorXd& alpha, Rng& rng) {
    if (alpha.size() < 1 || (alpha.array() <= 0.0).any())
        throw ConfigError("sample_topics: concentrations must be positive");
    Eigen::VectorXd g(alpha.size());
    for (Eigen::Index i = 0; i < alpha.size(); ++i) g(i) = rng.gamma(alpha(i));
    double s = g.sum();
    if (s <= 0.0) {
        g.setConstant(1.0);
        s = static_cast<double>(alpha.size());
    }
    return g / s;
}

Dataset generate_dataset(const Ecosystem& eco, long n, Rng& rng) {
    eco.validate();
    if (n < 1) throw ConfigError("generate_dataset: n must be >= 1");

    Dataset data;
    data.reserve(static_cast<std::size_t>(n));
    const int n_style = eco.n_style();
    for (long i = 0; i < n; ++i) {
        Rng r = rng.split("record", static_cast<std::uint64_t>(i));
        ArticleRecord rec;
        rec.record_id = i;

        // fixed draw order: politician, event, date, topics, t, style, nuisance
        const auto& pol = eco.politicians[r.uniform_int(eco.politicians.size())];
        rec.politician_id = pol.id;
        rec.context.event_id =
            static_cast<int>(r.uniform_int(static_cast<std::uint64_t>(eco.n_clusters)));
        rec.context.date_index =
            static_cast<int>(r.uniform_int(static_cast<std::uint64_t>(eco.n_dates)));
        rec.context.topics = sample_topics(eco.topic_alpha, r);

        rec.image.t = r.uniform() < pol.smile_prob ? 1 : 0;
        rec.image.z_minus_t.resize(eco.d_z());
        for (int c = 0; c < eco.n_nuisance; ++c) {
            double shift = (c == 0) ? eco.kappa * rec.image.t : 0.0;
            rec.image.z_minus_t(c) = shift + r.normal();
        }
        for (int c = 0; c < n_style; ++c)
            rec.image.z_minus_t(eco.n_nuisance + c) =
                eco.cluster_style_means(rec.context.event_id, c) +
                eco.style_sigma * r.normal();

        rec.outlet_id = assign_outlet(rec.image, rec.context, pol, eco, r);
        data.push_back(std::move(rec));
    }
    return data;
}

double true_delta_u(const Ecosystem& eco, int politician_id, int outlet_id) {
    const auto& p = eco.politician(politician_id);
    const auto& o = eco.outlet(outlet_id);
    double v = o.slant(p.affiliation);
    if (o.t_topic_interaction.size() > 0) {
        const Eigen::VectorXd mean = eco.topic_alpha / eco.topic_alpha.sum();
        v += o.t_topic_interaction.dot(mean);
    }
    return v;
}

double true_polarization(const Ecosystem& eco, int politician_id, int y1,
                         int y2) {
    return true_delta_u(eco, politician_id, y1) -
           true_delta_u(eco, politician_id, y2);
}

void write_dataset_jsonl(const Dataset& data, const Ecosystem& eco,
                         std::ostream& out) {
    for (const auto& rec : data) {
        json j;
        j["record_id"] = rec.record_id;
        j["outlet_id"] = rec.outlet_id;
        j["politician_id"] = rec.politician_id;
        j["affiliation"] = to_string(eco.politician(rec.politician_id).affiliation);
        j["date_index"] = rec.context.date_index;
        j["event_id"] = rec.context.event_id;
        j["topics"] = vec_to_json(rec.context.topics);
        j["t"] = rec.image.t;
        j["z_minus_t"] = vec_to_json(rec.image.z_minus_t);
        out << j.dump() << '\n';
    }
}

LoadedDataset read_dataset_jsonl(std::istream& in) {
    LoadedDataset out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ArticleRecord rec;
        rec.record_id = j.at("record_id").get<long>();
        rec.outlet_id = j.at("outlet_id").get<int>();
        rec.politician_id = j.at("politician_id").get<int>();
        rec.context.date_index = j.at("date_index").get<int>();
        rec.context.event_id = j.at("event_id").get<int>();
        rec.context.topics = vec_from_json(j.at("topics"));
        rec.image.t = j.at("t").get<int>();
        rec.image.z_minus_t = vec_from_json(j.at("z_minus_t"));
        out.affiliations[rec.politician_id] =
            affiliation_from_string(j.at("affiliation").get<std::string>());
        out.records.push_back(std::move(rec));
    }
    return out;
}

}  // namespace vispol
