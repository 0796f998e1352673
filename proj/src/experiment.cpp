#include "vispol/experiment.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vispol/errors.hpp"
#include "vispol/format.hpp"
#include "vispol/stats.hpp"

namespace vispol {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ClassWeighting weighting_from_string(const std::string& s) {
    if (s == "inverse_frequency") return ClassWeighting::InverseFrequency;
    if (s == "none") return ClassWeighting::None;
    throw ConfigError("unknown class_weighting: " + s);
}

Strata strata_from_string(const std::string& s) {
    if (s == "none") return Strata::None;
    if (s == "outlet") return Strata::Outlet;
    if (s == "outlet_date") return Strata::OutletDate;
    throw ConfigError("unknown strata: " + s);
}

ModelVariant variant_from_string(const std::string& s) {
    if (s == "multinomial_logit") return ModelVariant::MultinomialLogit;
    if (s == "one_hidden_layer_net") return ModelVariant::OneHiddenLayerNet;
    throw ConfigError("unknown model variant: " + s);
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const fs::path& config_path) {
    return from_json(read_json_file(config_path), config_path.parent_path());
}

ExperimentConfig ExperimentConfig::from_json(const json& j,
                                             const fs::path& base_dir) {
    ExperimentConfig cfg;
    if (!j.contains("seed")) throw ConfigError("missing config key: seed");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir"))
        cfg.out_dir = base_dir / j.at("out_dir").get<std::string>();

    if (j.contains("ecosystem")) {
        cfg.ecosystem = Ecosystem::from_json(j.at("ecosystem"));
    } else if (j.contains("ecosystem_path")) {
        cfg.ecosystem = Ecosystem::from_json(
            read_json_file(base_dir / j.at("ecosystem_path").get<std::string>()));
    } else {
        throw ConfigError("missing config key: ecosystem");
    }

    if (j.contains("simulate"))
        cfg.n_articles = j.at("simulate").value("n_articles", cfg.n_articles);

    if (j.contains("model")) {
        const json& m = j.at("model");
        cfg.model.variant =
            variant_from_string(m.value("variant", "multinomial_logit"));
        cfg.model.hidden_width = m.value("hidden_width", 16);
        if (m.contains("features")) {
            const json& f = m.at("features");
            auto& t = cfg.feature_toggles;
            t.use_t = f.value("t", true);
            t.use_t_affiliation = f.value("t_affiliation", true);
            t.use_t_politician = f.value("t_politician", true);
            t.use_image = f.value("image", true);
            t.use_topics = f.value("topics", true);
            t.use_affiliation = f.value("affiliation", true);
            t.use_politician = f.value("politician", true);
            t.use_date = f.value("date", true);
        }
    }

    if (j.contains("train")) {
        const json& t = j.at("train");
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
        cfg.train.weight_decay = t.value("weight_decay", cfg.train.weight_decay);
        cfg.train.beta1 = t.value("beta1", cfg.train.beta1);
        cfg.train.beta2 = t.value("beta2", cfg.train.beta2);
        cfg.train.eps = t.value("eps", cfg.train.eps);
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.label_smoothing =
            t.value("label_smoothing", cfg.train.label_smoothing);
        if (t.contains("class_weighting"))
            cfg.train.weighting =
                weighting_from_string(t.at("class_weighting").get<std::string>());
    }

    cfg.measure.baseline_outlet_id = cfg.ecosystem.neutral_outlet_id;
    cfg.measure.n_nuisance = cfg.ecosystem.n_nuisance;
    if (j.contains("measure")) {
        const json& m = j.at("measure");
        cfg.measure.pairs_per_politician =
            m.value("S", cfg.measure.pairs_per_politician);
        cfg.measure.baseline_outlet_id =
            m.value("baseline_outlet_id", cfg.measure.baseline_outlet_id);
        cfg.measure.ovp_include_baseline =
            m.value("ovp_include_baseline", false);
        cfg.measure.train_frac = m.value("train_frac", 0.85);
        if (m.contains("strata"))
            cfg.measure.strata =
                strata_from_string(m.at("strata").get<std::string>());
        cfg.measure.condition_on_outlet = m.value("condition_on_outlet", false);
        if (m.contains("rep_outlets"))
            cfg.measure.rep_outlets = m.at("rep_outlets").get<std::vector<int>>();
        if (m.contains("dem_outlets"))
            cfg.measure.dem_outlets = m.at("dem_outlets").get<std::vector<int>>();
        cfg.measure.style_z_max = m.value("style_z_max", 2.0);
        cfg.write_article_values = m.value("write_article_values", false);
    }

    if (j.contains("baseline")) {
        const json& b = j.at("baseline");
        cfg.bias_replications = b.value("replications", cfg.bias_replications);
        if (b.contains("scenarios")) {
            for (const json& s : b.at("scenarios")) {
                BiasScenario sc;
                sc.name = s.at("name").get<std::string>();
                sc.alpha = s.value("alpha", sc.alpha);
                sc.beta = s.value("beta", sc.beta);
                sc.delta = s.value("delta", sc.delta);
                sc.confound_loading =
                    s.value("confound_loading", sc.confound_loading);
                sc.sigma_w = s.value("sigma_w", sc.sigma_w);
                sc.sigma_e = s.value("sigma_e", sc.sigma_e);
                sc.sigma_r = s.value("sigma_r", sc.sigma_r);
                sc.kappa_e = s.value("kappa_e", sc.kappa_e);
                sc.n = s.value("n", sc.n);
                cfg.bias_scenarios.push_back(std::move(sc));
            }
        }
    }

    if (j.contains("validate")) {
        const json& v = j.at("validate");
        cfg.validate_noisy_sigma = v.value("noisy_sigma", 0.0);
        cfg.validate_noisy_drift = v.value("noisy_drift", 0.0);
        if (v.contains("scores"))
            cfg.external_scores = base_dir / v.at("scores").get<std::string>();
    }

    return cfg;
}

void cmd_simulate(const ExperimentConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, "simulate"));
    const Dataset data = generate_dataset(cfg.ecosystem, cfg.n_articles, rng);

    std::ostringstream jsonl;
    write_dataset_jsonl(data, cfg.ecosystem, jsonl);
    write_file(cfg.out_dir / "dataset.jsonl", jsonl.str());

    json manifest;
    manifest["ecosystem"] = cfg.ecosystem.to_json();
    manifest["n_articles"] = cfg.n_articles;
    manifest["seed"] = cfg.seed;
    json slants = json::array();
    for (const auto& p : cfg.ecosystem.politicians)
        for (const auto& o : cfg.ecosystem.outlets)
            slants.push_back(
                {{"politician_id", p.id},
                 {"outlet_id", o.outlet_id},
                 {"value", true_polarization(cfg.ecosystem, p.id, o.outlet_id,
                                             cfg.ecosystem.neutral_outlet_id)}});
    manifest["true_slant"] = std::move(slants);
    write_file(cfg.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

LoadedDataset load_dataset(const ExperimentConfig& cfg) {
    std::ifstream in(cfg.out_dir / "dataset.jsonl");
    if (!in)
        throw UsageError("dataset not found: " +
                         (cfg.out_dir / "dataset.jsonl").string() +
                         " (run simulate first)");
    return read_dataset_jsonl(in);
}

std::map<std::pair<int, int>, double> load_true_slant(
    const ExperimentConfig& cfg, int baseline) {
    std::map<std::pair<int, int>, double> out;
    const fs::path path = cfg.out_dir / "manifest.json";
    if (!fs::exists(path)) return out;
    const json manifest = read_json_file(path);
    if (!manifest.contains("true_slant")) return out;
    // re-baseline via the telescoping identity when the configured baseline
    // differs from the manifest's neutral outlet
    std::map<std::pair<int, int>, double> vs_neutral;
    for (const json& e : manifest.at("true_slant"))
        vs_neutral[{e.at("politician_id").get<int>(),
                    e.at("outlet_id").get<int>()}] = e.at("value").get<double>();
    for (const auto& [key, v] : vs_neutral) {
        auto base = vs_neutral.find({key.first, baseline});
        if (base != vs_neutral.end()) out[key] = v - base->second;
    }
    return out;
}

void write_report_files(const ExperimentConfig& cfg,
                        const PolarizationReport& report) {
    write_file(cfg.out_dir / "rho.csv", rho_csv(report));
    write_file(cfg.out_dir / "slant.csv", slant_csv(report));
    write_file(cfg.out_dir / "cvs.csv", cvs_csv(report));
    write_file(cfg.out_dir / "ovp.csv", ovp_csv(report));
    const auto true_slant =
        load_true_slant(cfg, report.baseline_outlet_id);
    write_file(cfg.out_dir / "summary.md",
               summary_markdown(report, true_slant.empty() ? nullptr
                                                           : &true_slant));
    if (cfg.write_article_values)
        write_file(cfg.out_dir / "article_values.json",
                   article_values_json(report));
}

json report_to_json(const PolarizationReport& r) {
    json j;
    j["baseline_outlet_id"] = r.baseline_outlet_id;
    j["outlet_ids"] = r.outlet_ids;
    j["politician_ids"] = r.politician_ids;
    json affs = json::object();
    for (const auto& [pid, a] : r.affiliations)
        affs[std::to_string(pid)] = to_string(a);
    j["affiliations"] = std::move(affs);
    json rho = json::array();
    for (const auto& [key, est] : r.rho)
        rho.push_back({{"politician_id", key.first},
                       {"outlet_id", key.second},
                       {"baseline_outlet_id", est.baseline_outlet_id},
                       {"value", est.value},
                       {"article_values", est.article_values}});
    j["rho"] = std::move(rho);
    j["rep_outlets"] = std::vector<int>(r.rep_outlets.begin(), r.rep_outlets.end());
    j["dem_outlets"] = std::vector<int>(r.dem_outlets.begin(), r.dem_outlets.end());
    j["missing_politicians"] = r.missing_politicians;
    return j;
}

PolarizationReport report_from_json(const json& j, bool ovp_include_baseline) {
    PolarizationReport r;
    r.baseline_outlet_id = j.at("baseline_outlet_id").get<int>();
    r.outlet_ids = j.at("outlet_ids").get<std::vector<int>>();
    r.politician_ids = j.at("politician_ids").get<std::vector<int>>();
    for (auto it = j.at("affiliations").begin(); it != j.at("affiliations").end();
         ++it)
        r.affiliations[std::stoi(it.key())] =
            affiliation_from_string(it.value().get<std::string>());
    for (const json& e : j.at("rho")) {
        RhoEstimate est = aggregate_rho(
            e.at("article_values").get<std::vector<double>>(),
            e.at("politician_id").get<int>(), e.at("outlet_id").get<int>(),
            e.at("baseline_outlet_id").get<int>());
        r.rho[{est.politician_id, est.outlet_id}] = std::move(est);
    }
    for (int y : r.outlet_ids) r.cvs_per_outlet[y] = cvs(r, y);
    for (int pid : r.politician_ids)
        r.ovp_per_politician[pid] = ovp(r, pid, ovp_include_baseline);
    const auto reps = j.at("rep_outlets").get<std::vector<int>>();
    const auto dems = j.at("dem_outlets").get<std::vector<int>>();
    r.rep_outlets.insert(reps.begin(), reps.end());
    r.dem_outlets.insert(dems.begin(), dems.end());
    r.missing_politicians = j.at("missing_politicians").get<std::vector<int>>();
    for (Affiliation pg : {Affiliation::Rep, Affiliation::Dem}) {
        for (const auto& [name, group] :
             {std::pair{std::string("rep"), &r.rep_outlets},
              std::pair{std::string("dem"), &r.dem_outlets}}) {
            GroupDistribution dist;
            dist.politician_group = pg;
            dist.outlet_group = name;
            for (int pid : r.politician_ids) {
                if (r.affiliations.at(pid) != pg) continue;
                for (int y : *group) {
                    auto it = r.rho.find({pid, y});
                    if (it == r.rho.end()) continue;
                    dist.values.insert(dist.values.end(),
                                       it->second.article_values.begin(),
                                       it->second.article_values.end());
                }
            }
            r.groups.push_back(std::move(dist));
        }
    }
    return r;
}

}  // namespace

void cmd_measure(const ExperimentConfig& cfg) {
    const LoadedDataset loaded = load_dataset(cfg);

    FeatureSpace space = FeatureSpace::from_ecosystem(cfg.ecosystem);
    const auto& t = cfg.feature_toggles;
    space.use_t = t.use_t;
    space.use_t_affiliation = t.use_t_affiliation;
    space.use_t_politician = t.use_t_politician;
    space.use_image = t.use_image;
    space.use_topics = t.use_topics;
    space.use_affiliation = t.use_affiliation;
    space.use_politician = t.use_politician;
    space.use_date = t.use_date;

    PipelineConfig pc;
    pc.model = cfg.model;
    pc.train = cfg.train;
    pc.measure = cfg.measure;
    pc.seed = derive_seed(cfg.seed, "measure");

    const PipelineResult result =
        run_pipeline(loaded.records, loaded.affiliations, space, pc);

    write_report_files(cfg, result.report);
    write_file(cfg.out_dir / "report.json",
               report_to_json(result.report).dump(2) + "\n");
    write_file(cfg.out_dir / "model.json", result.model.to_json().dump() + "\n");
    json sets = json::array();
    for (const auto& s : result.sets) sets.push_back(s.to_json());
    write_file(cfg.out_dir / "counterfactual_sets.json", sets.dump(2) + "\n");
}

void cmd_baseline(const ExperimentConfig& cfg) {
    const auto scenarios = cfg.bias_scenarios.empty() ? default_bias_scenarios()
                                                      : cfg.bias_scenarios;
    Rng rng(derive_seed(cfg.seed, "baseline"));
    const auto reports =
        verify_bias_propositions(scenarios, cfg.bias_replications, rng);
    write_file(cfg.out_dir / "bias_report.csv", bias_report_csv(reports));
}

void cmd_validate(const ExperimentConfig& cfg) {
    const LoadedDataset loaded = load_dataset(cfg);
    auto [train_set, test_set] =
        split_train_test(loaded.records, cfg.measure.train_frac,
                         cfg.measure.strata,
                         derive_seed(derive_seed(cfg.seed, "measure"), "split"));
    const StyleStats style = StyleStats::estimate(train_set, cfg.measure.n_nuisance);
    const auto sets = build_counterfactual_sets(
        test_set, style, cfg.measure.pairs_per_politician, cfg.measure.style_z_max);
    if (sets.empty()) throw UsageError("validate: no counterfactual sets");

    Rng rng(derive_seed(cfg.seed, "validate"));
    std::vector<ImageVector> originals, generated;
    for (const auto& set : sets) {
        for (const auto& pair : set.pairs) {
            originals.push_back(pair.z0);
            if (cfg.validate_noisy_sigma > 0.0 || cfg.validate_noisy_drift != 0.0) {
                generated.push_back(noisy_pi1(pair.z0, cfg.validate_noisy_sigma,
                                              rng, cfg.validate_noisy_drift));
            } else {
                generated.push_back(pair.z1);
            }
        }
    }
    const auto validation = validate_counterfactual_set(
        originals, generated, 0.05, cfg.measure.n_nuisance > 0
                                        ? cfg.measure.n_nuisance
                                        : -1);
    std::ostringstream os;
    os << "coordinate,ks_statistic,p_value,flagged\n";
    for (const auto& c : validation.coordinates)
        os << c.coordinate << ',' << format_num(c.statistic) << ','
           << format_num(c.p_value) << ',' << (c.flagged ? 1 : 0) << '\n';
    write_file(cfg.out_dir / "ks_report.csv", os.str());

    if (cfg.external_scores) {
        const fs::path cvs_path = cfg.out_dir / "cvs.csv";
        if (!fs::exists(cvs_path))
            throw UsageError("validate: cvs.csv not found (run measure first)");
        std::map<int, double> cvs_by_outlet;
        {
            std::istringstream in(read_file(cvs_path));
            std::string line;
            std::getline(in, line);  // header
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const auto comma = line.find(',');
                cvs_by_outlet[std::stoi(line.substr(0, comma))] =
                    std::stod(line.substr(comma + 1));
            }
        }
        std::map<int, double> scores;
        {
            std::istringstream in(read_file(*cfg.external_scores));
            std::string line;
            std::getline(in, line);  // header: outlet_id,score
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const auto comma = line.find(',');
                scores[std::stoi(line.substr(0, comma))] =
                    std::stod(line.substr(comma + 1));
            }
        }
        std::vector<double> x, y;
        for (const auto& [outlet, value] : cvs_by_outlet) {
            auto it = scores.find(outlet);
            if (it == scores.end()) continue;
            x.push_back(value);
            y.push_back(it->second);
        }
        if (x.size() < 3)
            throw UsageError("validate: fewer than 3 outlets joined with scores");
        const auto pr = stats::pearson(x, y);
        const auto sr = stats::spearman(x, y);
        std::ostringstream cs;
        cs << "method,coefficient,p_value,n\n";
        cs << "pearson," << format_num(pr.coefficient) << ','
           << format_num(pr.p_value) << ',' << pr.n << '\n';
        cs << "spearman," << format_num(sr.coefficient) << ','
           << format_num(sr.p_value) << ',' << sr.n << '\n';
        write_file(cfg.out_dir / "correlations.csv", cs.str());
    }
}

void cmd_report(const ExperimentConfig& cfg) {
    const fs::path path = cfg.out_dir / "report.json";
    if (!fs::exists(path))
        throw UsageError("report.json not found (run measure first)");
    const PolarizationReport report = report_from_json(
        read_json_file(path), cfg.measure.ovp_include_baseline);
    write_report_files(cfg, report);
}

int run_command(const std::string& command, const ExperimentConfig& cfg) {
    try {
        if (command == "simulate") {
            cmd_simulate(cfg);
        } else if (command == "measure") {
            cmd_measure(cfg);
        } else if (command == "baseline") {
            cmd_baseline(cfg);
        } else if (command == "validate") {
            cmd_validate(cfg);
        } else if (command == "report") {
            cmd_report(cfg);
        } else {
            std::cerr << "unknown command: " << command << "\n";
            return 2;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return 3;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace vispol
