#include "vispol/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "vispol/errors.hpp"
#include "vispol/rng.hpp"

namespace vispol {

using nlohmann::json;

int FeatureSpace::dim() const {
    const int np = static_cast<int>(politician_ids.size());
    int d = 1;  // constant
    if (use_t) d += 1;
    if (use_t_affiliation) d += 1;
    if (use_t_politician) d += np;
    if (use_image) d += d_z;
    if (use_topics) d += n_topics;
    if (use_affiliation) d += 1;
    if (use_politician) d += np;
    if (use_date) d += n_dates;
    return d;
}

int FeatureSpace::class_index(int outlet_id) const {
    auto it = std::lower_bound(class_ids.begin(), class_ids.end(), outlet_id);
    if (it == class_ids.end() || *it != outlet_id)
        throw UsageError("unknown outlet id " + std::to_string(outlet_id));
    return static_cast<int>(it - class_ids.begin());
}

int FeatureSpace::politician_index(int politician_id) const {
    auto it = std::lower_bound(politician_ids.begin(), politician_ids.end(),
                               politician_id);
    if (it == politician_ids.end() || *it != politician_id)
        throw UsageError("unknown politician id " + std::to_string(politician_id));
    return static_cast<int>(it - politician_ids.begin());
}

Eigen::VectorXd FeatureSpace::features(const ImageVector& z,
                                       const ArticleContext& x,
                                       int politician_id) const {
    if (z.z_minus_t.size() != d_z)
        throw UsageError("features: image dimension mismatch");
    if (x.topics.size() != n_topics)
        throw UsageError("features: topic dimension mismatch");
    const int pi = politician_index(politician_id);
    const double aff =
        affiliations.at(politician_id) == Affiliation::Rep ? 1.0 : 0.0;
    const double t = static_cast<double>(z.t);

    Eigen::VectorXd f = Eigen::VectorXd::Zero(dim());
    int col = 0;
    f(col++) = 1.0;
    if (use_t) f(col++) = t;
    if (use_t_affiliation) f(col++) = t * aff;
    if (use_t_politician) {
        f(col + pi) = t;
        col += static_cast<int>(politician_ids.size());
    }
    if (use_image) {
        f.segment(col, d_z) = z.z_minus_t;
        col += d_z;
    }
    if (use_topics) {
        f.segment(col, n_topics) = x.topics;
        col += n_topics;
    }
    if (use_affiliation) f(col++) = aff;
    if (use_politician) {
        f(col + pi) = 1.0;
        col += static_cast<int>(politician_ids.size());
    }
    if (use_date) {
        if (x.date_index < 0 || x.date_index >= n_dates)
            throw UsageError("features: date_index out of range");
        f(col + x.date_index) = 1.0;
    }
    return f;
}

FeatureSpace FeatureSpace::from_ecosystem(const Ecosystem& eco) {
    FeatureSpace s;
    s.d_z = eco.d_z();
    s.n_topics = eco.n_topics();
    s.n_dates = eco.n_dates;
    for (const auto& p : eco.politicians) {
        s.politician_ids.push_back(p.id);
        s.affiliations[p.id] = p.affiliation;
    }
    std::sort(s.politician_ids.begin(), s.politician_ids.end());
    s.class_ids = eco.outlet_ids();
    std::sort(s.class_ids.begin(), s.class_ids.end());
    return s;
}

FeatureSpace FeatureSpace::from_dataset(const Dataset& data,
                                        const std::map<int, Affiliation>& affil) {
    if (data.empty()) throw UsageError("FeatureSpace: empty dataset");
    FeatureSpace s;
    s.d_z = static_cast<int>(data.front().image.z_minus_t.size());
    s.n_topics = static_cast<int>(data.front().context.topics.size());
    s.affiliations = affil;
    std::set<int> pols, outlets;
    int max_date = 0;
    for (const auto& rec : data) {
        pols.insert(rec.politician_id);
        outlets.insert(rec.outlet_id);
        max_date = std::max(max_date, rec.context.date_index);
    }
    s.n_dates = max_date + 1;
    s.politician_ids.assign(pols.begin(), pols.end());
    s.class_ids.assign(outlets.begin(), outlets.end());
    for (int pid : s.politician_ids)
        if (!s.affiliations.count(pid))
            throw UsageError("FeatureSpace: missing affiliation for politician " +
                             std::to_string(pid));
    return s;
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
    if (label_smoothing < 0.0 || label_smoothing >= 1.0)
        throw ConfigError("label_smoothing must be in [0, 1)");
    if (epochs < 1 || batch_size < 1)
        throw ConfigError("epochs and batch_size must be >= 1");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw ConfigError("beta1/beta2 must be in [0, 1)");
    if (eps <= 0.0) throw ConfigError("eps must be > 0");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
}

int PredictionModel::n_params() const {
    const int d = space.dim(), c = n_classes();
    if (variant == ModelVariant::MultinomialLogit) return c * d;
    return hidden * d + hidden + c * hidden + c;
}

Eigen::VectorXd PredictionModel::logits_from_features(
    const Eigen::VectorXd& x) const {
    const int d = space.dim(), c = n_classes();
    if (variant == ModelVariant::MultinomialLogit) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            w(theta.data(), c, d);
        return w * x;
    }
    const int h = hidden;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        w1(theta.data(), h, d);
    Eigen::Map<const Eigen::VectorXd> b1(theta.data() + h * d, h);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        w2(theta.data() + h * d + h, c, h);
    Eigen::Map<const Eigen::VectorXd> b2(theta.data() + h * d + h + c * h, c);
    const Eigen::VectorXd a = ((w1 * x) + b1).array().tanh();
    return w2 * a + b2;
}

Eigen::VectorXd PredictionModel::logits(const ImageVector& z,
                                        const ArticleContext& x,
                                        int politician_id) const {
    return logits_from_features(space.features(z, x, politician_id));
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

Eigen::VectorXd PredictionModel::predict_proba(const ImageVector& z,
                                               const ArticleContext& x,
                                               int politician_id) const {
    return softmax(logits(z, x, politician_id));
}

PredictionModel init_model(const FeatureSpace& space, const ModelConfig& mc,
                           std::uint64_t seed) {
    PredictionModel m;
    m.variant = mc.variant;
    m.space = space;
    m.seed = seed;
    if (mc.variant == ModelVariant::OneHiddenLayerNet) {
        if (mc.hidden_width < 1)
            throw ConfigError("OneHiddenLayerNet needs hidden_width >= 1");
        m.hidden = mc.hidden_width;
    }
    m.theta = Eigen::VectorXd::Zero(m.n_params());
    m.class_weights = Eigen::VectorXd::Ones(m.n_classes());
    if (mc.variant == ModelVariant::OneHiddenLayerNet) {
        Rng rng = Rng(seed).split("init");
        const int d = space.dim(), h = m.hidden, c = m.n_classes();
        const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
        for (int i = 0; i < h * d; ++i)
            m.theta(i) = s1 * (2.0 * rng.uniform() - 1.0);
        const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
        const int off = h * d + h;
        for (int i = 0; i < c * h; ++i)
            m.theta(off + i) = s2 * (2.0 * rng.uniform() - 1.0);
    }
    return m;
}

std::pair<double, Eigen::VectorXd> loss_and_grad(
    const PredictionModel& model, const Eigen::MatrixXd& X,
    std::span<const int> labels, std::span<const std::size_t> batch,
    const Eigen::VectorXd& class_weights, double label_smoothing) {
    if (batch.empty()) throw UsageError("loss_and_grad: empty batch");
    const int d = model.space.dim();
    const int c = model.n_classes();
    const int h = model.hidden;
    const double nb = static_cast<double>(batch.size());
    const double a = label_smoothing;
    const double off_target = a / static_cast<double>(c);

    double loss = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.theta.size());

    for (std::size_t bi = 0; bi < batch.size(); ++bi) {
        const std::size_t i = batch[bi];
        const Eigen::VectorXd x = X.row(i).transpose();
        const int yi = labels[i];

        Eigen::VectorXd act;  // hidden activations (net only)
        Eigen::VectorXd logits;
        if (model.variant == ModelVariant::MultinomialLogit) {
            logits = model.logits_from_features(x);
        } else {
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                           Eigen::Dynamic, Eigen::RowMajor>>
                w1(model.theta.data(), h, d);
            Eigen::Map<const Eigen::VectorXd> b1(model.theta.data() + h * d, h);
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                           Eigen::Dynamic, Eigen::RowMajor>>
                w2(model.theta.data() + h * d + h, c, h);
            Eigen::Map<const Eigen::VectorXd> b2(
                model.theta.data() + h * d + h + c * h, c);
            act = ((w1 * x) + b1).array().tanh();
            logits = w2 * act + b2;
        }

        const double mx = logits.maxCoeff();
        const Eigen::VectorXd shifted = logits.array() - mx;
        const double lse = std::log(shifted.array().exp().sum());
        const Eigen::VectorXd logp = shifted.array() - lse;
        const Eigen::VectorXd p = logp.array().exp();

        // smoothed weighted targets: q_c = w_c * ((1-a) [c==y] + a/C)
        double wq_sum = 0.0;
        double sample_loss = 0.0;
        Eigen::VectorXd dlogits(c);
        for (int k = 0; k < c; ++k) {
            const double q =
                class_weights(k) * (off_target + (k == yi ? 1.0 - a : 0.0));
            wq_sum += q;
            sample_loss -= q * logp(k);
            dlogits(k) = -q;
        }
        dlogits += wq_sum * p;
        dlogits /= nb;
        loss += sample_loss / nb;

        if (model.variant == ModelVariant::MultinomialLogit) {
            Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>
                gw(grad.data(), c, d);
            gw.noalias() += dlogits * x.transpose();
        } else {
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                           Eigen::Dynamic, Eigen::RowMajor>>
                w1(model.theta.data(), h, d);
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                           Eigen::Dynamic, Eigen::RowMajor>>
                w2(model.theta.data() + h * d + h, c, h);
            Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>
                gw1(grad.data(), h, d);
            Eigen::Map<Eigen::VectorXd> gb1(grad.data() + h * d, h);
            Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>
                gw2(grad.data() + h * d + h, c, h);
            Eigen::Map<Eigen::VectorXd> gb2(grad.data() + h * d + h + c * h, c);

            gw2.noalias() += dlogits * act.transpose();
            gb2 += dlogits;
            const Eigen::VectorXd dact = w2.transpose() * dlogits;
            const Eigen::VectorXd dpre =
                dact.array() * (1.0 - act.array().square());
            gw1.noalias() += dpre * x.transpose();
            gb1 += dpre;
        }
    }
    return {loss, std::move(grad)};
}

void adamw_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                AdamWState& state, const TrainConfig& cfg, long t) {
    if (t < 1) throw UsageError("adamw_step: step index starts at 1");
    if (state.m.size() != theta.size()) {
        state.m = Eigen::VectorXd::Zero(theta.size());
        state.v = Eigen::VectorXd::Zero(theta.size());
    }
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    state.v =
        cfg.beta2 * state.v.array() + (1.0 - cfg.beta2) * grad.array().square();
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    const Eigen::ArrayXd m_hat = state.m.array() / bc1;
    const Eigen::ArrayXd v_hat = state.v.array() / bc2;
    theta.array() -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps) +
                     cfg.weight_decay * theta.array();
}

Eigen::VectorXd class_weight_vector(std::span<const int> labels, int n_classes,
                                    ClassWeighting weighting) {
    if (weighting == ClassWeighting::None)
        return Eigen::VectorXd::Ones(n_classes);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_classes);
    for (int y : labels) counts(y) += 1.0;
    const double total = static_cast<double>(labels.size());
    Eigen::VectorXd w(n_classes);
    for (int ci = 0; ci < n_classes; ++ci) {
        if (counts(ci) <= 0.0)
            throw ConfigError(
                "inverse-frequency weighting: class " + std::to_string(ci) +
                " has no training examples");
        w(ci) = (total / counts(ci)) / static_cast<double>(n_classes);
    }
    return w;
}

namespace {

struct Featurized {
    Eigen::MatrixXd X;
    std::vector<int> y;
};

Featurized featurize(const Dataset& data, const FeatureSpace& space) {
    Featurized out;
    out.X.resize(static_cast<Eigen::Index>(data.size()), space.dim());
    out.y.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.X.row(static_cast<Eigen::Index>(i)) =
            space.features(data[i].image, data[i].context, data[i].politician_id)
                .transpose();
        out.y.push_back(space.class_index(data[i].outlet_id));
    }
    return out;
}

}  // namespace

PredictionModel train(const Dataset& train_set, const FeatureSpace& space,
                      const ModelConfig& mc, const TrainConfig& tc) {
    tc.validate();
    if (train_set.empty()) throw UsageError("train: empty training set");

    PredictionModel model = init_model(space, mc, tc.seed);
    model.label_smoothing = tc.label_smoothing;
    const Featurized data = featurize(train_set, space);
    model.class_weights =
        class_weight_vector(data.y, space.n_classes(), tc.weighting);

    const std::size_t n = train_set.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    Rng root(tc.seed);
    AdamWState state;
    long step = 0;
    std::vector<std::size_t> all(order);

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng shuffle_rng = root.split("epoch", static_cast<std::uint64_t>(epoch));
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = shuffle_rng.uniform_int(i);
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < n; start += tc.batch_size) {
            const std::size_t len = std::min<std::size_t>(tc.batch_size, n - start);
            std::span<const std::size_t> batch(order.data() + start, len);
            auto [loss, grad] = loss_and_grad(model, data.X, data.y, batch,
                                              model.class_weights,
                                              tc.label_smoothing);
            if (!std::isfinite(loss))
                throw TrainingError("train: non-finite loss at step " +
                                    std::to_string(step + 1));
            adamw_step(model.theta, grad, state, tc, ++step);
        }
        auto [epoch_loss, g] = loss_and_grad(model, data.X, data.y, all,
                                             model.class_weights,
                                             tc.label_smoothing);
        (void)g;
        model.epoch_losses.push_back(epoch_loss);
    }

    model.epochs = tc.epochs;
    model.final_loss = model.epoch_losses.empty() ? 0.0 : model.epoch_losses.back();
    return model;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& data,
                                             double train_frac, Strata strata,
                                             std::uint64_t seed) {
    if (data.empty()) throw UsageError("split_train_test: empty dataset");
    if (train_frac < 0.0 || train_frac > 1.0)
        throw UsageError("split_train_test: train_frac out of [0,1]");

    std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::pair<int, int> key{0, 0};
        if (strata == Strata::Outlet) key = {data[i].outlet_id, 0};
        if (strata == Strata::OutletDate)
            key = {data[i].outlet_id, data[i].context.date_index};
        groups[key].push_back(i);
    }

    Rng root(seed);
    std::vector<bool> in_train(data.size(), false);
    std::uint64_t stratum_ordinal = 0;
    for (auto& [key, idx] : groups) {
        Rng rng = root.split("stratum", stratum_ordinal++);
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
        const auto n_train = static_cast<std::size_t>(
            std::llround(train_frac * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < idx.size(); ++i)
            in_train[idx[i]] = i < n_train;
    }

    std::pair<Dataset, Dataset> out;
    for (std::size_t i = 0; i < data.size(); ++i)
        (in_train[i] ? out.first : out.second).push_back(data[i]);
    return out;
}

EvalReport evaluate(const PredictionModel& model, const Dataset& test) {
    if (test.empty()) throw UsageError("evaluate: empty test set");
    const int c = model.n_classes();
    EvalReport rep;
    rep.support.assign(c, 0);
    std::vector<long> predicted(c, 0), correct(c, 0);

    Eigen::MatrixXd X(test.size(), model.space.dim());
    std::vector<int> y;
    y.reserve(test.size());
    long hits = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const Eigen::VectorXd f = model.space.features(
            test[i].image, test[i].context, test[i].politician_id);
        X.row(static_cast<Eigen::Index>(i)) = f.transpose();
        const int yi = model.space.class_index(test[i].outlet_id);
        y.push_back(yi);
        const Eigen::VectorXd logits = model.logits_from_features(f);
        int arg = 0;
        for (int k = 1; k < c; ++k)
            if (logits(k) > logits(arg)) arg = k;  // ties keep lowest index
        ++rep.support[yi];
        ++predicted[arg];
        if (arg == yi) {
            ++correct[arg];
            ++hits;
        }
    }
    rep.accuracy = static_cast<double>(hits) / static_cast<double>(test.size());

    rep.precision.assign(c, 0.0);
    rep.recall.assign(c, 0.0);
    rep.f1.assign(c, 0.0);
    for (int k = 0; k < c; ++k) {
        rep.precision[k] =
            predicted[k] > 0
                ? static_cast<double>(correct[k]) / static_cast<double>(predicted[k])
                : 0.0;
        rep.recall[k] =
            rep.support[k] > 0
                ? static_cast<double>(correct[k]) / static_cast<double>(rep.support[k])
                : 0.0;
        const double pr = rep.precision[k] + rep.recall[k];
        rep.f1[k] = pr > 0.0 ? 2.0 * rep.precision[k] * rep.recall[k] / pr : 0.0;
    }

    std::vector<std::size_t> all(test.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto [wce, g] = loss_and_grad(model, X, y, all, model.class_weights,
                                  model.label_smoothing);
    (void)g;
    rep.wce = wce;
    return rep;
}

namespace {

json vec_json(const Eigen::VectorXd& v) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

Eigen::VectorXd json_vec(const json& j) {
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

}  // namespace

json FeatureSpace::to_json() const {
    json j;
    j["d_z"] = d_z;
    j["n_topics"] = n_topics;
    j["n_dates"] = n_dates;
    j["politician_ids"] = politician_ids;
    j["class_ids"] = class_ids;
    json affs = json::object();
    for (const auto& [pid, a] : affiliations)
        affs[std::to_string(pid)] = to_string(a);
    j["affiliations"] = std::move(affs);
    j["use"] = {{"t", use_t},
                {"t_affiliation", use_t_affiliation},
                {"t_politician", use_t_politician},
                {"image", use_image},
                {"topics", use_topics},
                {"affiliation", use_affiliation},
                {"politician", use_politician},
                {"date", use_date}};
    return j;
}

FeatureSpace FeatureSpace::from_json(const json& j) {
    FeatureSpace s;
    s.d_z = j.at("d_z").get<int>();
    s.n_topics = j.at("n_topics").get<int>();
    s.n_dates = j.at("n_dates").get<int>();
    s.politician_ids = j.at("politician_ids").get<std::vector<int>>();
    s.class_ids = j.at("class_ids").get<std::vector<int>>();
    for (auto it = j.at("affiliations").begin(); it != j.at("affiliations").end();
         ++it)
        s.affiliations[std::stoi(it.key())] =
            affiliation_from_string(it.value().get<std::string>());
    const json& use = j.at("use");
    s.use_t = use.at("t").get<bool>();
    s.use_t_affiliation = use.at("t_affiliation").get<bool>();
    s.use_t_politician = use.at("t_politician").get<bool>();
    s.use_image = use.at("image").get<bool>();
    s.use_topics = use.at("topics").get<bool>();
    s.use_affiliation = use.at("affiliation").get<bool>();
    s.use_politician = use.at("politician").get<bool>();
    s.use_date = use.at("date").get<bool>();
    return s;
}

json PredictionModel::to_json() const {
    json j;
    j["format_version"] = 1;
    j["variant"] = variant == ModelVariant::MultinomialLogit
                       ? "multinomial_logit"
                       : "one_hidden_layer_net";
    j["feature_space"] = space.to_json();
    j["hidden"] = hidden;
    j["theta"] = vec_json(theta);
    j["class_weights"] = vec_json(class_weights);
    j["label_smoothing"] = label_smoothing;
    j["meta"] = {{"seed", seed}, {"epochs", epochs}, {"final_loss", final_loss}};
    return j;
}

PredictionModel PredictionModel::from_json(const json& j) {
    if (j.value("format_version", 0) != 1)
        throw ConfigError("unsupported model checkpoint version");
    PredictionModel m;
    const std::string v = j.at("variant").get<std::string>();
    if (v == "multinomial_logit") {
        m.variant = ModelVariant::MultinomialLogit;
    } else if (v == "one_hidden_layer_net") {
        m.variant = ModelVariant::OneHiddenLayerNet;
    } else {
        throw ConfigError("unknown model variant: " + v);
    }
    m.space = FeatureSpace::from_json(j.at("feature_space"));
    m.hidden = j.at("hidden").get<int>();
    m.theta = json_vec(j.at("theta"));
    m.class_weights = json_vec(j.at("class_weights"));
    m.label_smoothing = j.at("label_smoothing").get<double>();
    m.seed = j.at("meta").at("seed").get<std::uint64_t>();
    m.epochs = j.at("meta").at("epochs").get<int>();
    m.final_loss = j.at("meta").at("final_loss").get<double>();
    if (m.theta.size() != m.n_params())
        throw ConfigError("model checkpoint: parameter size mismatch");
    return m;
}

}  // namespace vispol
