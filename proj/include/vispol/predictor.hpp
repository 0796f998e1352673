#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "vispol/ecosystem.hpp"

namespace vispol {

// Deterministic assembly of the model input from (image, context,
// politician). Dimensions and id maps are frozen when the space is built so
// train and test records featurize identically.
struct FeatureSpace {
    int d_z = 0;
    int n_topics = 0;
    int n_dates = 0;
    std::vector<int> politician_ids;  // sorted
    std::map<int, Affiliation> affiliations;
    std::vector<int> class_ids;       // sorted outlet ids

    bool use_t = true;
    bool use_t_affiliation = true;
    bool use_t_politician = true;
    bool use_image = true;
    bool use_topics = true;
    bool use_affiliation = true;
    bool use_politician = true;
    bool use_date = true;

    int dim() const;
    int n_classes() const { return static_cast<int>(class_ids.size()); }
    int class_index(int outlet_id) const;
    int politician_index(int politician_id) const;

    // Layout: [1, t, t*aff, t*pol one-hot, z_minus_t, topics, aff,
    //          pol one-hot, date one-hot], with disabled blocks skipped.
    Eigen::VectorXd features(const ImageVector& z, const ArticleContext& x,
                             int politician_id) const;

    static FeatureSpace from_ecosystem(const Ecosystem& eco);
    static FeatureSpace from_dataset(const Dataset& data,
                                     const std::map<int, Affiliation>& affil);

    nlohmann::json to_json() const;
    static FeatureSpace from_json(const nlohmann::json& j);
};

enum class ModelVariant { MultinomialLogit, OneHiddenLayerNet };

struct ModelConfig {
    ModelVariant variant = ModelVariant::MultinomialLogit;
    int hidden_width = 16;  // OneHiddenLayerNet only; must be >= 1
};

enum class ClassWeighting { InverseFrequency, None };

struct TrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs = 30;
    int batch_size = 64;
    double label_smoothing = 0.05;
    ClassWeighting weighting = ClassWeighting::InverseFrequency;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PredictionModel {
    ModelVariant variant = ModelVariant::MultinomialLogit;
    FeatureSpace space;
    int hidden = 0;                 // 0 for MultinomialLogit
    Eigen::VectorXd theta;          // flat parameters
    Eigen::VectorXd class_weights;  // frozen training weights
    double label_smoothing = 0.0;

    std::uint64_t seed = 0;
    int epochs = 0;
    double final_loss = 0.0;
    std::vector<double> epoch_losses;

    int n_classes() const { return space.n_classes(); }
    int n_params() const;

    Eigen::VectorXd logits_from_features(const Eigen::VectorXd& x) const;
    Eigen::VectorXd logits(const ImageVector& z, const ArticleContext& x,
                           int politician_id) const;
    // Max-subtracted stable softmax of the logits; strictly positive, sums
    // to one.
    Eigen::VectorXd predict_proba(const ImageVector& z, const ArticleContext& x,
                                  int politician_id) const;

    nlohmann::json to_json() const;
    static PredictionModel from_json(const nlohmann::json& j);
};

// Fresh model with deterministic initial parameters (zeros for the logit,
// seeded uniform for the net).
PredictionModel init_model(const FeatureSpace& space, const ModelConfig& mc,
                           std::uint64_t seed);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Weighted cross-entropy with label smoothing over a batch of featurized
// rows, with its exact gradient in theta. Accumulation runs in ascending
// batch order so results are bit-reproducible.
//   L = -(1/N) sum_i sum_c w_c ((1-a) y_ic + a/C) log yhat_ic
std::pair<double, Eigen::VectorXd> loss_and_grad(
    const PredictionModel& model, const Eigen::MatrixXd& X,
    std::span<const int> labels, std::span<const std::size_t> batch,
    const Eigen::VectorXd& class_weights, double label_smoothing);

struct AdamWState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
};

// One decoupled-weight-decay Adam update (step index t starts at 1):
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
//                 - weight_decay * theta_prev
void adamw_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                AdamWState& state, const TrainConfig& cfg, long t);

// Inverse-frequency class weights, w_c = (N / count_c) / C, computed over
// the training labels. Throws ConfigError when a class has no training
// examples.
Eigen::VectorXd class_weight_vector(std::span<const int> labels, int n_classes,
                                    ClassWeighting weighting);

// Minibatch AdamW over the weighted smoothed cross-entropy. Deterministic
// given (configs, seed): shuffles use a seed-derived stream and the
// reduction order is fixed. Records the full-train loss after every epoch.
PredictionModel train(const Dataset& train_set, const FeatureSpace& space,
                      const ModelConfig& mc, const TrainConfig& tc);

enum class Strata { None, Outlet, OutletDate };

// Disjoint, exhaustive split; each stratum contributes round(frac * n_s)
// records to train. Deterministic given seed; outputs keep record order.
std::pair<Dataset, Dataset> split_train_test(const Dataset& data,
                                             double train_frac, Strata strata,
                                             std::uint64_t seed);

struct EvalReport {
    double accuracy = 0.0;
    double wce = 0.0;
    std::vector<long> support;      // per class, sums to test size
    std::vector<double> precision;  // per class
    std::vector<double> recall;
    std::vector<double> f1;
};

// Argmax prediction with lowest-index tie-break; per-class precision/recall/
// F1 plus the weighted smoothed cross-entropy under the model's frozen
// training weights.
EvalReport evaluate(const PredictionModel& model, const Dataset& test);

}  // namespace vispol
