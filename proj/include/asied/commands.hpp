#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "asied/analysis.hpp"
#include "asied/config.hpp"
#include "asied/csv.hpp"
#include "asied/lr.hpp"
#include "asied/simulator.hpp"

namespace asied {

struct CommandOptions {
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = ".";
};

namespace detail {

inline std::ofstream open_output(const std::string& out_dir, const std::string& name) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path path = std::filesystem::path(out_dir) / name;
    std::ofstream out(path);
    if (!out) throw RuntimeFailure("cannot write output file: " + path.string());
    return out;
}

inline void write_region_file(std::ofstream& out, const EffectGrid& grid, const GridRegion& region,
                              const std::vector<std::pair<std::string, double>>& summary,
                              int decimals) {
    for (const auto& [key, value] : summary)
        out << "# " << key << "=" << format_fixed(value, decimals) << '\n';
    out << "# n_points=" << region.count << " grid_size=" << grid.size << '\n';
    out << "#";
    for (const auto& name : grid.panel.names) out << '\t' << name;
    out << '\n';
    for (std::int64_t d = 0; d < grid.size; ++d) {
        if (!region.contains(d)) continue;
        const auto x = grid.point(d);
        for (std::size_t k = 0; k < x.size(); ++k)
            out << (k ? "\t" : "") << format_fixed(x[k], decimals);
        out << '\n';
    }
}

inline void write_decision_log(std::ofstream& out, const std::vector<TrialResult>& trials,
                               int decimals) {
    for (std::size_t h = 0; h < trials.size(); ++h) {
        for (const auto& rec : trials[h].log) {
            out << "trial=" << h + 1 << " analysis=" << rec.analysis << " n=" << rec.n
                << " context=" << rec.context
                << " pr_lrv_all=" << format_fixed(rec.pr_lrv_all, decimals)
                << " pr_tv_all=" << format_fixed(rec.pr_tv_all, decimals);
            if (rec.pr_lrv_sub) {
                out << " pr_lrv_sub=" << format_fixed(*rec.pr_lrv_sub, decimals)
                    << " pr_tv_sub=" << format_fixed(*rec.pr_tv_sub, decimals);
            } else {
                out << " pr_lrv_sub=NA pr_tv_sub=NA";
            }
            out << " zone=" << rec.zone << " decision=" << rec.decision << '\n';
        }
    }
}

inline std::string truth_name(TruthClass t) {
    switch (t) {
        case TruthClass::Null: return "no effective subgroup";
        case TruthClass::EffectiveSubgroup: return "effective subgroup";
        case TruthClass::EffectiveAllComers: return "effective all-comers";
    }
    return "?";
}

inline TrialDataset prepare_identify_dataset(const std::string& data_path, const RunConfig& cfg,
                                             std::vector<std::string>* notes) {
    CsvDataset loaded = read_dataset_csv(data_path);
    TrialDataset ds = std::move(loaded.dataset);
    if (cfg.identify_outcome == "binary") ds.outcome = OutcomeKind::Binary;
    if (cfg.identify_outcome == "continuous") ds.outcome = OutcomeKind::Continuous;
    std::vector<PatientRecord> observed;
    observed.reserve(ds.records.size());
    for (auto& rec : ds.records)
        if (rec.y) observed.push_back(std::move(rec));
    if (observed.size() != ds.records.size() && notes)
        notes->push_back(std::to_string(ds.records.size() - observed.size()) +
                         " records without an observed outcome were excluded");
    ds.records = std::move(observed);
    if (ds.records.empty()) throw ConfigError("no records with observed outcomes");
    return ds;
}

}  // namespace detail

// Fit the partition model to a dataset and report the effective subgroup.
inline void cmd_identify(const std::string& data_path, const RunConfig& cfg,
                         const CommandOptions& opts) {
    std::vector<std::string> notes;
    const TrialDataset ds = detail::prepare_identify_dataset(data_path, cfg, &notes);
    const EffectGrid grid = build_grid(ds.panel, cfg.identify_grid);

    AnalysisSettings settings = cfg.trial.analysis;
    settings.candidate_xi = cfg.identify_xi;
    const AnalysisResult analysis = run_analysis(ds, grid, settings, opts.seed);

    std::vector<std::pair<std::string, double>> summary = {
        {"pr_lrv_all", analysis.all_comers.pr_lrv},
        {"pr_tv_all", analysis.all_comers.pr_tv},
        {"mean_effect_all", analysis.all_comers.mean},
    };
    if (analysis.candidate) {
        summary.emplace_back("pr_lrv_region", analysis.candidate->pr_lrv);
        summary.emplace_back("pr_tv_region", analysis.candidate->pr_tv);
        summary.emplace_back("mean_effect_region", analysis.candidate->mean);
    }
    auto region_file = detail::open_output(opts.out_dir, "region.txt");
    detail::write_region_file(region_file, grid, analysis.eq3_region, summary, cfg.decimals);

    json doc;
    doc["command"] = "identify";
    doc["seed"] = opts.seed;
    doc["n"] = ds.size();
    doc["outcome"] = ds.outcome == OutcomeKind::Binary ? "binary" : "continuous";
    doc["draws"] = analysis.draws;
    doc["all_comers"] = {{"pr_lrv", analysis.all_comers.pr_lrv},
                         {"pr_tv", analysis.all_comers.pr_tv},
                         {"mean_effect", analysis.all_comers.mean},
                         {"zone", zone_name(analysis.zone_all)}};
    doc["effective_subgroup"] = {{"n_points", analysis.eq3_region.count},
                                 {"grid_size", grid.size},
                                 {"xi", cfg.identify_xi}};
    if (analysis.candidate) {
        doc["candidate"] = {{"pr_lrv", analysis.candidate->pr_lrv},
                            {"pr_tv", analysis.candidate->pr_tv},
                            {"mean_effect", analysis.candidate->mean},
                            {"n_points", analysis.candidate->region.count},
                            {"fallback", analysis.candidate_fallback},
                            {"zone", zone_name(*analysis.zone_candidate)}};
    }
    if (!notes.empty()) doc["notes"] = notes;
    auto summary_file = detail::open_output(opts.out_dir, "summary.json");
    summary_file << doc.dump(2) << '\n';

    std::vector<std::pair<std::string, int>> structures(analysis.structure_freq.begin(),
                                                        analysis.structure_freq.end());
    std::sort(structures.begin(), structures.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    auto trees_file = detail::open_output(opts.out_dir, "trees.txt");
    trees_file << "# posterior structure frequencies over " << analysis.draws << " draws\n";
    for (const auto& [sig, count] : structures)
        trees_file << format_fixed(static_cast<double>(count) / analysis.draws, cfg.decimals)
                   << '\t' << sig << '\n';
}

// LR comparator on the same report pipeline.
inline void cmd_baseline_lr(const std::string& data_path, const RunConfig& cfg,
                            const CommandOptions& opts) {
    std::vector<std::string> notes;
    const TrialDataset ds = detail::prepare_identify_dataset(data_path, cfg, &notes);
    const EffectGrid grid = build_grid(ds.panel, cfg.identify_grid);

    LrConfig lr = cfg.lr;
    lr.chain.seed = opts.seed;
    const LrDraws draws = fit_lr(ds, lr);
    const Tpp& tpp = cfg.trial.analysis.tpp;
    const PointwiseSummary pw = lr_pointwise_summary(draws, grid, tpp.lrv);
    const GridRegion region = effective_subgroup_from_counts(grid, pw, cfg.identify_xi);

    const double thresholds[] = {tpp.lrv, tpp.tv};
    const RegionSummary all = lr_region_summary(draws, grid, GridRegion::all(grid), thresholds);
    std::vector<std::pair<std::string, double>> summary = {
        {"pr_lrv_all", all.exceed_prob[0]},
        {"pr_tv_all", all.exceed_prob[1]},
        {"mean_effect_all", all.mean},
    };
    if (!region.empty()) {
        const RegionSummary sub = lr_region_summary(draws, grid, region, thresholds);
        summary.emplace_back("pr_lrv_region", sub.exceed_prob[0]);
        summary.emplace_back("pr_tv_region", sub.exceed_prob[1]);
        summary.emplace_back("mean_effect_region", sub.mean);
    }
    auto region_file = detail::open_output(opts.out_dir, "region.txt");
    detail::write_region_file(region_file, grid, region, summary, cfg.decimals);

    json doc;
    doc["command"] = "baseline-lr";
    doc["seed"] = opts.seed;
    doc["n"] = ds.size();
    doc["draws"] = draws.size();
    doc["all_comers"] = {{"pr_lrv", all.exceed_prob[0]},
                         {"pr_tv", all.exceed_prob[1]},
                         {"mean_effect", all.mean}};
    doc["effective_subgroup"] = {{"n_points", region.count},
                                 {"grid_size", grid.size},
                                 {"xi", cfg.identify_xi}};
    if (!notes.empty()) doc["notes"] = notes;
    auto summary_file = detail::open_output(opts.out_dir, "summary.json");
    summary_file << doc.dump(2) << '\n';
}

inline const ScenarioSpec& require_scenario(const RunConfig& cfg) {
    if (!cfg.scenario) throw ConfigError("this command needs a scenario section");
    return *cfg.scenario;
}

// Single simulated trial.
inline void cmd_simulate(const RunConfig& cfg, const CommandOptions& opts) {
    const ScenarioSpec& scenario = require_scenario(cfg);
    const EffectGrid grid = build_grid(scenario.panel, cfg.trial.grid_points);
    const TrialResult trial = simulate_trial(scenario, cfg.trial, grid, opts.seed);

    json doc;
    doc["command"] = "simulate";
    doc["seed"] = opts.seed;
    doc["scenario"] = scenario.name;
    doc["first_decision"] = interim_name(trial.first_decision);
    if (trial.second_decision) doc["second_decision"] = second_name(*trial.second_decision);
    doc["final_a"] = trial.final_a;
    doc["enrolled"] = trial.enrolled;
    doc["enriched"] = trial.enriched;
    if (trial.enriched) doc["enriched_points"] = trial.enriched_region.count;
    auto out = detail::open_output(opts.out_dir, "trial.json");
    out << doc.dump(2) << '\n';

    auto log = detail::open_output(opts.out_dir, "decisions.log");
    detail::write_decision_log(log, {trial}, cfg.decimals);
}

// Operating characteristics over H replicate trials.
inline void cmd_oc(const RunConfig& cfg, const CommandOptions& opts) {
    const ScenarioSpec& scenario = require_scenario(cfg);
    const EffectGrid grid = build_grid(scenario.panel, cfg.trial.grid_points);
    std::vector<TrialResult> trials;
    const OperatingCharacteristics oc = run_operating_characteristics(
        scenario, cfg.trial, grid, cfg.replicates, opts.seed, opts.threads, &trials);

    auto tsv = detail::open_output(opts.out_dir, "oc.tsv");
    tsv << "scenario\ttruth\tPr(All)\tPr(Sub)\tPr(EarS)\tPr(2All)\tPr(2Sub)"
        << "\tPr(a=2)\tPr(a=1)\tPr(a=0)\n";
    tsv << scenario.name << '\t'
        << detail::truth_name(classify_truth(scenario, cfg.trial.analysis.tpp.lrv));
    for (InterimKind k :
         {InterimKind::ContinueAll, InterimKind::EnrichGo, InterimKind::StopFutility,
          InterimKind::SecondInterimAll, InterimKind::SecondInterimEnriched})
        tsv << '\t' << format_fixed(oc.pr_interim(k), cfg.decimals);
    for (int a : {2, 1, 0}) tsv << '\t' << format_fixed(oc.pr_final(a), cfg.decimals);
    tsv << '\n';

    json doc;
    doc["command"] = "oc";
    doc["seed"] = opts.seed;
    doc["scenario"] = scenario.name;
    doc["replicates"] = oc.replicates;
    doc["interim"] = {{"all", oc.pr_interim(InterimKind::ContinueAll)},
                      {"sub", oc.pr_interim(InterimKind::EnrichGo)},
                      {"early_stop", oc.pr_interim(InterimKind::StopFutility)},
                      {"second_all", oc.pr_interim(InterimKind::SecondInterimAll)},
                      {"second_sub", oc.pr_interim(InterimKind::SecondInterimEnriched)}};
    doc["final"] = {{"a2", oc.pr_final(2)}, {"a1", oc.pr_final(1)}, {"a0", oc.pr_final(0)}};
    auto summary = detail::open_output(opts.out_dir, "oc.json");
    summary << doc.dump(2) << '\n';

    auto log = detail::open_output(opts.out_dir, "decisions.log");
    detail::write_decision_log(log, trials, cfg.decimals);
}

// Decision-threshold calibration over a (xi1, xi2) grid.
inline void cmd_calibrate(const RunConfig& cfg, const CommandOptions& opts) {
    std::vector<ScenarioSpec> suite = cfg.calibrate_scenarios;
    if (suite.empty() && cfg.scenario) suite.push_back(*cfg.scenario);
    if (suite.empty()) throw ConfigError("calibrate needs calibrate.scenarios");
    const EffectGrid grid = build_grid(suite.front().panel, cfg.trial.grid_points);
    for (const auto& s : suite)
        if (s.panel.size() != suite.front().panel.size())
            throw ConfigError("calibration scenarios must share one panel shape");

    const CalibrationResult result =
        calibrate_thresholds(suite, cfg.trial, grid, cfg.xi1_grid, cfg.xi2_grid, cfg.caps,
                             cfg.replicates, opts.seed, opts.threads);

    auto tsv = detail::open_output(opts.out_dir, "calibration.tsv");
    tsv << "xi1\txi2\tFSR\tFGR\tFER\tadmissible";
    for (const auto& name : result.scenario_names)
        for (const char* col : {"Pr(All)", "Pr(Sub)", "Pr(EarS)", "Pr(2All)", "Pr(2Sub)"})
            tsv << '\t' << name << ":" << col;
    tsv << '\n';
    for (const auto& row : result.rows) {
        tsv << format_fixed(row.xi1, cfg.decimals) << '\t' << format_fixed(row.xi2, cfg.decimals)
            << '\t' << format_fixed(row.risks.fsr, cfg.decimals) << '\t'
            << format_fixed(row.risks.fgr, cfg.decimals) << '\t'
            << format_fixed(row.risks.fer, cfg.decimals) << '\t' << (row.admissible ? 1 : 0);
        for (const auto& freq : row.scenario_freqs)
            for (double f : freq) tsv << '\t' << format_fixed(f, cfg.decimals);
        tsv << '\n';
    }
}

// First-interim decision frequencies versus the interim sample size.
inline void cmd_sensitivity(const RunConfig& cfg, const CommandOptions& opts) {
    const ScenarioSpec& scenario = require_scenario(cfg);
    const EffectGrid grid = build_grid(scenario.panel, cfg.trial.grid_points);
    const auto rows = sensitivity_n1(scenario, cfg.trial, grid, cfg.sensitivity_n1,
                                     cfg.replicates, opts.seed, opts.threads);
    auto tsv = detail::open_output(opts.out_dir, "sensitivity.tsv");
    tsv << "n1\tPr(All)\tPr(Sub)\tPr(EarS)\tPr(2All)\tPr(2Sub)\n";
    for (const auto& row : rows) {
        tsv << row.n1;
        for (double f : row.freq) tsv << '\t' << format_fixed(f, cfg.decimals);
        tsv << '\n';
    }
}

}  // namespace asied
