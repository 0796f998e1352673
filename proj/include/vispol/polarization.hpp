#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vispol/counterfactual.hpp"
#include "vispol/ecosystem.hpp"
#include "vispol/predictor.hpp"

namespace vispol {

// Anything that scores outlets for an (image, context, politician) triple on
// the utility (logit) scale. Log-odds between two outlets are logit
// differences, so probabilities never need to be exponentiated.
class OutletScorer {
  public:
    virtual ~OutletScorer() = default;
    virtual const std::vector<int>& class_ids() const = 0;  // sorted
    virtual Eigen::VectorXd logits(const ImageVector& z, const ArticleContext& x,
                                   int politician_id) const = 0;
    int class_index(int outlet_id) const;
};

class ModelScorer : public OutletScorer {
  public:
    explicit ModelScorer(const PredictionModel& model) : model_(&model) {}
    const std::vector<int>& class_ids() const override {
        return model_->space.class_ids;
    }
    Eigen::VectorXd logits(const ImageVector& z, const ArticleContext& x,
                           int politician_id) const override {
        return model_->logits(z, x, politician_id);
    }

  private:
    const PredictionModel* model_;
};

// Scores with the ecosystem's exact deterministic utilities; makes
// measurement error vanish by construction.
class OracleScorer : public OutletScorer {
  public:
    explicit OracleScorer(const Ecosystem& eco);
    const std::vector<int>& class_ids() const override { return ids_; }
    Eigen::VectorXd logits(const ImageVector& z, const ArticleContext& x,
                           int politician_id) const override;

  private:
    const Ecosystem* eco_;
    std::vector<int> ids_;
};

// Mean over the politician's counterfactual pairs of
//   [logit(y_k) - logit(y_0)](z1) - [logit(y_k) - logit(y_0)](z0)
// evaluated at the article context.
double article_level_rho(const OutletScorer& scorer,
                         const CounterfactualSet& pairs,
                         const ArticleContext& x_j, int politician_id, int y_k,
                         int y_0);

struct RhoEstimate {
    int politician_id = 0;
    int outlet_id = 0;
    int baseline_outlet_id = 0;
    double value = 0.0;
    std::vector<double> article_values;
    std::size_t n_articles = 0;
};

RhoEstimate aggregate_rho(std::vector<double> article_values, int politician_id,
                          int outlet_id, int baseline_outlet_id);

struct GroupDistribution {
    Affiliation politician_group = Affiliation::Dem;
    std::string outlet_group;  // "rep" or "dem"
    std::vector<double> values;
};

struct PolarizationReport {
    int baseline_outlet_id = 0;
    std::vector<int> outlet_ids;      // sorted, includes the baseline
    std::vector<int> politician_ids;  // sorted, politicians with estimates
    std::map<int, Affiliation> affiliations;
    // (politician, outlet) -> rho vs the baseline; the baseline column is
    // identically zero.
    std::map<std::pair<int, int>, RhoEstimate> rho;
    std::map<int, double> cvs_per_outlet;
    std::map<int, double> ovp_per_politician;
    std::set<int> rep_outlets, dem_outlets;  // groups used for distributions
    std::vector<GroupDistribution> groups;
    std::vector<int> missing_politicians;  // no counterfactual set or articles

    double slant(int politician_id, int outlet_id) const;
    // Baseline-free contrast: slant(y1) - slant(y2).
    double pairwise_polarization(int politician_id, int y1, int y2) const;
};

// Mean slant over Republican politicians minus mean slant over Democratic
// politicians for one outlet.
double cvs(const PolarizationReport& report, int outlet_id);

// Population standard deviation (1/|Y| divisor) of the politician's slants
// across outlets; the baseline outlet is excluded unless include_baseline.
double ovp(const PolarizationReport& report, int politician_id,
           bool include_baseline = false);

struct MeasurementOptions {
    int pairs_per_politician = 3;  // S
    int baseline_outlet_id = 0;
    bool ovp_include_baseline = false;
    double train_frac = 0.85;
    Strata strata = Strata::OutletDate;
    int n_nuisance = 0;  // leading z_minus_t coords that are not style
    // Average only over test articles the outlet itself produced (the
    // conditional-expectation reading) instead of all articles featuring the
    // politician (the default).
    bool condition_on_outlet = false;
    std::vector<int> rep_outlets, dem_outlets;  // empty -> derive from CVS sign
    double style_z_max = 2.0;
};

// Step 3: article-level and aggregated measurement over the (held-out) test
// records, plus CVS / OVP / group distributions.
PolarizationReport measure_polarization(const Dataset& test,
                                        const OutletScorer& scorer,
                                        const std::vector<CounterfactualSet>& sets,
                                        const std::map<int, Affiliation>& affil,
                                        const MeasurementOptions& opt);

struct PipelineConfig {
    ModelConfig model;
    TrainConfig train;
    MeasurementOptions measure;
    std::uint64_t seed = 0;  // fans out to split/train sub-streams
};

struct PipelineResult {
    PolarizationReport report;
    PredictionModel model;
    std::vector<CounterfactualSet> sets;
    Dataset train_set;
    Dataset test_set;
};

// The full measurement pipeline with cross-fitting: stratified split,
// counterfactual sets from neutral test images, model training on the train
// split only, measurement on the test split only.
PipelineResult run_pipeline(const Dataset& full,
                            const std::map<int, Affiliation>& affil,
                            const FeatureSpace& space, const PipelineConfig& cfg);

// Deterministic sub-seed derivation for named pipeline phases.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

// Report serialization (6-significant-digit numerics, stable ordering).
std::string rho_csv(const PolarizationReport& r);
std::string slant_csv(const PolarizationReport& r);
std::string cvs_csv(const PolarizationReport& r);
std::string ovp_csv(const PolarizationReport& r);
std::string article_values_json(const PolarizationReport& r);
std::string summary_markdown(const PolarizationReport& r,
                             const std::map<std::pair<int, int>, double>*
                                 true_slant = nullptr);

}  // namespace vispol
