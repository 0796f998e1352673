#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "vispol/rng.hpp"

namespace vispol {

enum class Affiliation { Dem, Rep };

std::string to_string(Affiliation a);
Affiliation affiliation_from_string(const std::string& s);

// The focal binary feature plus everything else in the image. The first
// `n_nuisance` coordinates of z_minus_t are nuisance analogues (brightness,
// edge density, ...); the rest are style coordinates tied to the event
// cluster.
struct ImageVector {
    int t = 0;  // 0 or 1
    Eigen::VectorXd z_minus_t;

    bool operator==(const ImageVector& other) const {
        return t == other.t && z_minus_t == other.z_minus_t;
    }
};

struct ArticleContext {
    Eigen::VectorXd topics;  // probability simplex
    int date_index = 0;
    int event_id = 0;
};

struct Politician {
    int id = 0;
    Affiliation affiliation = Affiliation::Dem;
    double smile_prob = 0.5;  // P(T = 1) when generating articles
};

struct OutletUtilitySpec {
    int outlet_id = 0;
    double alpha = 0.0;
    double slant_dem = 0.0;  // T coefficient when the politician is a Democrat
    double slant_rep = 0.0;  // ... when the politician is a Republican
    Eigen::VectorXd gamma;   // weights on z_minus_t, length d_z
    Eigen::VectorXd delta;   // weights on topics, length n_topics
    std::map<int, double> politician_affinity;     // missing ids -> 0
    Eigen::VectorXd t_topic_interaction;           // empty or length n_topics

    double slant(Affiliation a) const {
        return a == Affiliation::Rep ? slant_rep : slant_dem;
    }
    double affinity(int politician_id) const {
        auto it = politician_affinity.find(politician_id);
        return it == politician_affinity.end() ? 0.0 : it->second;
    }
};

struct Ecosystem {
    std::vector<OutletUtilitySpec> outlets;
    std::vector<Politician> politicians;
    Eigen::VectorXd topic_alpha;
    int n_clusters = 1;
    int n_nuisance = 1;
    Eigen::MatrixXd cluster_style_means;  // n_clusters x n_style
    double style_sigma = 0.5;
    double kappa = 0.0;  // generative confound: E[nuisance_0 | T] = kappa * T
    int n_dates = 4;
    int neutral_outlet_id = 0;
    std::uint64_t seed = 0;

    int n_style() const { return static_cast<int>(cluster_style_means.cols()); }
    int d_z() const { return n_nuisance + n_style(); }
    int n_topics() const { return static_cast<int>(topic_alpha.size()); }

    const OutletUtilitySpec& outlet(int id) const;
    const Politician& politician(int id) const;
    int outlet_index(int id) const;
    std::vector<int> outlet_ids() const;

    // Throws ConfigError on any violated invariant (dimension mismatches,
    // non-neutral baseline, missing affiliations, ...).
    void validate() const;

    static Ecosystem from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct ArticleRecord {
    long record_id = 0;
    ImageVector image;
    ArticleContext context;
    int politician_id = 0;
    int outlet_id = 0;
};

using Dataset = std::vector<ArticleRecord>;

// Deterministic utility of producing an article with this image/context/
// politician for the given outlet.
double utility(const ImageVector& z, const ArticleContext& x,
               const Politician& p, const OutletUtilitySpec& spec);

// Utilities for every outlet in ecosystem order.
Eigen::VectorXd utilities(const ImageVector& z, const ArticleContext& x,
                          const Politician& p, const Ecosystem& eco);

// Gumbel-max draw over outlets; ties resolve to the lowest outlet id.
int assign_outlet(const ImageVector& z, const ArticleContext& x,
                  const Politician& p, const Ecosystem& eco, Rng& rng);

// Dirichlet draw on the simplex; all concentrations must be positive.
Eigen::VectorXd sample_topics(const Eigen::VectorXd& alpha, Rng& rng);

// Samples n articles. Per-record draws come from streams split by record
// index, so the output is byte-stable and order-deterministic regardless of
// sharding.
Dataset generate_dataset(const Ecosystem& eco, long n, Rng& rng);

// Exact Delta^T u(p, y): the slant coefficient, plus the Dirichlet-mean
// interaction term when the T x topic interaction is enabled.
double true_delta_u(const Ecosystem& eco, int politician_id, int outlet_id);

double true_polarization(const Ecosystem& eco, int politician_id, int y1,
                         int y2);

// JSON-lines dataset serialization (one record per line).
void write_dataset_jsonl(const Dataset& data, const Ecosystem& eco,
                         std::ostream& out);

struct LoadedDataset {
    Dataset records;
    std::map<int, Affiliation> affiliations;  // politician id -> affiliation
};

LoadedDataset read_dataset_jsonl(std::istream& in);

}  // namespace vispol
