#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "vispol/ecosystem.hpp"
#include "vispol/polarization.hpp"
#include "vispol/twostep.hpp"

namespace vispol {

// One experiment = one JSON config + one global seed. Every command output
// is a pure function of (config, seed). The seed fans out to named
// sub-streams per command so partial reruns reproduce exactly.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    Ecosystem ecosystem;
    long n_articles = 10000;

    ModelConfig model;
    FeatureSpace feature_toggles;  // only the use_* flags are read
    TrainConfig train;
    MeasurementOptions measure;
    bool write_article_values = false;

    std::vector<BiasScenario> bias_scenarios;  // empty -> defaults
    int bias_replications = 200;

    double validate_noisy_sigma = 0.0;
    double validate_noisy_drift = 0.0;
    std::optional<std::filesystem::path> external_scores;

    static ExperimentConfig load(const std::filesystem::path& config_path);
    static ExperimentConfig from_json(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir);
};

// Command bodies shared by the CLI binary and the tests. Each writes its
// outputs under cfg.out_dir and throws typed errors on failure.

// dataset.jsonl + manifest.json (ecosystem + ground-truth slant table)
void cmd_simulate(const ExperimentConfig& cfg);

// split/train/measure: rho.csv, slant.csv, cvs.csv, ovp.csv, summary.md,
// model.json, counterfactual_sets.json, report.json
// (+ article_values.json when requested)
void cmd_measure(const ExperimentConfig& cfg);

// bias_report.csv across the three proposition scenarios
void cmd_baseline(const ExperimentConfig& cfg);

// ks_report.csv for counterfactual consistency; correlations.csv when an
// external score table is configured and cvs.csv exists
void cmd_validate(const ExperimentConfig& cfg);

// re-render summary.md and the CSV tables from report.json
void cmd_report(const ExperimentConfig& cfg);

// Maps thrown errors to the documented exit codes: 0 ok, 2 config/usage,
// 3 estimation/training.
int run_command(const std::string& command, const ExperimentConfig& cfg);

}  // namespace vispol
