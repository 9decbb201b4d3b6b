#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asied/analysis.hpp"
#include "asied/decision.hpp"
#include "asied/rng.hpp"
#include "asied/util.hpp"

namespace asied {

// One conjunct of the effect-region predicate.
struct AxisCondition {
    enum class Op { Gt, Lt, Eq };
    int axis = 0;
    Op op = Op::Gt;
    double value = 0.0;

    bool holds(const std::vector<double>& x) const {
        const double v = x[static_cast<std::size_t>(axis)];
        switch (op) {
            case Op::Gt: return v > value;
            case Op::Lt: return v < value;
            case Op::Eq: return v == value;
        }
        return false;
    }
};

// Virtual-patient generator: continuous biomarkers ~ Uniform(range), binary
// ~ Bernoulli(1/2); response y = baseline + beta0 I(z=2) + beta1 I(x in
// region) I(z=2) + N(0, sd^2).
struct ScenarioSpec {
    std::string name;
    BiomarkerPanel panel;
    double baseline = 0.75;
    double beta0 = 0.0;
    double beta1 = 0.0;
    std::vector<AxisCondition> region;  // conjunction; empty = everywhere
    double noise_sd = 0.5;

    bool in_region(const std::vector<double>& x) const {
        for (const auto& c : region)
            if (!c.holds(x)) return false;
        return true;
    }

    double response_mean(const std::vector<double>& x, int arm) const {
        double y = baseline;
        if (arm == 2) {
            y += beta0;
            if (beta1 != 0.0 && in_region(x)) y += beta1;
        }
        return y;
    }

    double true_effect(const std::vector<double>& x) const {
        return beta0 + (in_region(x) ? beta1 : 0.0);
    }

    std::vector<double> draw_profile(Rng& rng) const {
        std::vector<double> x(static_cast<std::size_t>(panel.size()));
        for (int k = 0; k < panel.size(); ++k) {
            const auto& kind = panel.kinds[static_cast<std::size_t>(k)];
            switch (kind.type) {
                case BiomarkerType::Continuous:
                    x[static_cast<std::size_t>(k)] = rng.uniform(kind.range_lo, kind.range_hi);
                    break;
                case BiomarkerType::Binary:
                    x[static_cast<std::size_t>(k)] = rng.bernoulli(0.5) ? 1.0 : 0.0;
                    break;
                case BiomarkerType::Ordinal:
                case BiomarkerType::Categorical:
                    x[static_cast<std::size_t>(k)] = 1 + rng.uniform_int(kind.levels);
                    break;
            }
        }
        return x;
    }

    // Grid points whose true treatment effect strictly exceeds lrv.
    GridRegion truth_region(const EffectGrid& grid, double lrv) const {
        GridRegion truth = GridRegion::none(grid);
        for (std::int64_t d = 0; d < grid.size; ++d)
            if (true_effect(grid.point(d)) > lrv) truth.add(d);
        return truth;
    }
};

inline void check_scenario(const ScenarioSpec& scenario) {
    check_panel(scenario.panel);
    if (!(scenario.noise_sd > 0.0)) throw ConfigError("scenario noise sd must be positive");
    for (const auto& c : scenario.region)
        if (c.axis < 0 || c.axis >= scenario.panel.size())
            throw ConfigError("scenario region references an unknown biomarker");
}

inline PatientRecord generate_patient(const ScenarioSpec& scenario, int id, int arm, Rng& rng) {
    PatientRecord rec;
    rec.id = id;
    rec.arm = arm;
    rec.x = scenario.draw_profile(rng);
    rec.y = scenario.response_mean(rec.x, arm) + rng.normal(0.0, scenario.noise_sd);
    return rec;
}

// Equal randomization variant.
inline PatientRecord generate_patient(const ScenarioSpec& scenario, int id, Rng& rng) {
    return generate_patient(scenario, id, rng.bernoulli(0.5) ? 2 : 1, rng);
}

struct TrialConfig {
    int max_n = 180;        // N
    int first_interim = 100;  // n1
    int second_cohort = 40;   // n2
    int arms = 2;
    int grid_points = 20;
    AnalysisSettings analysis;
};

inline void check_trial_config(const TrialConfig& cfg) {
    if (cfg.first_interim <= 0 || cfg.first_interim >= cfg.max_n)
        throw ConfigError("n1 must satisfy 0 < n1 < N");
    if (cfg.second_cohort <= 0 || cfg.first_interim + cfg.second_cohort >= cfg.max_n)
        throw ConfigError("n2 must satisfy n1 + n2 < N");
    if (cfg.arms != 2) throw ConfigError("the simulator supports exactly 2 arms");
    check_tpp(cfg.analysis.tpp);
    check_chain_config(cfg.analysis.chain);
}

// One structured record per analysis, the decision-log surface.
struct AnalysisRecord {
    int analysis = 0;  // 1-based
    int n = 0;
    std::string context;   // all-comers | enriched
    double pr_lrv_all = 0.0, pr_tv_all = 0.0;
    std::optional<double> pr_lrv_sub, pr_tv_sub;
    std::string zone;
    std::string decision;
};

struct TrialResult {
    InterimKind first_decision = InterimKind::StopFutility;
    std::optional<SecondKind> second_decision;
    int final_a = 0;
    GridRegion enriched_region;  // frozen after an enrichment decision
    bool enriched = false;
    int enriched_from = 0;  // first record index enrolled under the frozen region
    int enrolled = 0;
    std::vector<PatientRecord> records;  // enrollment history
    std::vector<AnalysisRecord> log;
};

namespace detail {

constexpr int kMaxRejectionDraws = 10000;

inline PatientRecord enroll_in_region(const ScenarioSpec& scenario, const EffectGrid& grid,
                                      const GridRegion& region, int id, Rng& rng) {
    for (int attempt = 0; attempt < kMaxRejectionDraws; ++attempt) {
        PatientRecord rec = generate_patient(scenario, id, rng);
        if (region_contains_profile(grid, region, rec.x)) return rec;
    }
    throw RuntimeFailure("enrichment region acceptance rate below 1e-4; region is degenerate");
}

inline AnalysisRecord make_record(int index, int n, const std::string& context,
                                  const AnalysisResult& analysis, const std::string& decision,
                                  bool enriched_context) {
    AnalysisRecord rec;
    rec.analysis = index;
    rec.n = n;
    rec.context = context;
    rec.pr_lrv_all = analysis.all_comers.pr_lrv;
    rec.pr_tv_all = analysis.all_comers.pr_tv;
    if (enriched_context && analysis.frozen) {
        rec.pr_lrv_sub = analysis.frozen->pr_lrv;
        rec.pr_tv_sub = analysis.frozen->pr_tv;
        rec.zone = zone_name(*analysis.zone_frozen);
    } else {
        if (analysis.candidate) {
            rec.pr_lrv_sub = analysis.candidate->pr_lrv;
            rec.pr_tv_sub = analysis.candidate->pr_tv;
        }
        rec.zone = zone_name(analysis.zone_all);
    }
    rec.decision = decision;
    return rec;
}

}  // namespace detail

// Run one ASIED trial: enroll n1 all-comers, act on the first interim,
// optionally enrich and/or run a second interim at n1+n2, then do the final
// analysis on all accumulated data at N (unless stopped early).
inline TrialResult simulate_trial(const ScenarioSpec& scenario, const TrialConfig& cfg,
                                  const EffectGrid& grid, std::uint64_t seed) {
    check_scenario(scenario);
    check_trial_config(cfg);
    Rng rng(seed);
    TrialResult result;

    TrialDataset data;
    data.panel = scenario.panel;
    data.arms = cfg.arms;
    data.outcome = OutcomeKind::Continuous;
    data.records.reserve(static_cast<std::size_t>(cfg.max_n));
    auto enroll_all_comers = [&](int upto) {
        while (static_cast<int>(data.records.size()) < upto)
            data.records.push_back(
                generate_patient(scenario, static_cast<int>(data.records.size()), rng));
    };
    auto enroll_enriched = [&](int upto) {
        if (result.enriched_from == 0) result.enriched_from = static_cast<int>(data.records.size());
        while (static_cast<int>(data.records.size()) < upto)
            data.records.push_back(detail::enroll_in_region(
                scenario, grid, result.enriched_region, static_cast<int>(data.records.size()), rng));
    };
    auto finish = [&](const FinalRec& rec) {
        result.final_a = rec.a;
        result.enrolled = static_cast<int>(data.records.size());
        result.records = std::move(data.records);
    };
    auto final_all_comers_analysis = [&](int analysis_index) {
        const AnalysisResult fin =
            run_analysis(data, grid, cfg.analysis, rng.u64());
        const FinalRec rec = final_all_comers(fin.zone_all, candidate_zone(fin));
        result.log.push_back(detail::make_record(analysis_index, data.size(), "all-comers", fin,
                                                 "final a=" + std::to_string(rec.a), false));
        finish(rec);
    };
    auto final_enriched_analysis = [&](int analysis_index) {
        const AnalysisResult fin =
            run_analysis(data, grid, cfg.analysis, rng.u64(), &result.enriched_region);
        const FinalRec rec = final_enriched(*fin.zone_frozen, result.enriched_region);
        result.log.push_back(detail::make_record(analysis_index, data.size(), "enriched", fin,
                                                 "final a=" + std::to_string(rec.a), true));
        finish(rec);
    };

    // first interim at n1
    enroll_all_comers(cfg.first_interim);
    const AnalysisResult first = run_analysis(data, grid, cfg.analysis, rng.u64());
    const InterimDecision decision = interim_decision(first.zone_all, candidate_zone(first));
    result.first_decision = decision.kind;
    result.log.push_back(detail::make_record(1, data.size(), "all-comers", first,
                                             interim_name(decision.kind), false));

    switch (decision.kind) {
        case InterimKind::ContinueAll: {
            enroll_all_comers(cfg.max_n);
            final_all_comers_analysis(2);
            return result;
        }
        case InterimKind::EnrichGo: {
            result.enriched = true;
            result.enriched_region = decision.region;
            enroll_enriched(cfg.max_n);
            final_enriched_analysis(2);
            return result;
        }
        case InterimKind::StopFutility: {
            finish(final_after_early_stop());
            return result;
        }
        case InterimKind::SecondInterimAll: {
            enroll_all_comers(cfg.first_interim + cfg.second_cohort);
            const AnalysisResult second = run_analysis(data, grid, cfg.analysis, rng.u64());
            const SecondDecision sd = second_interim_all_comers(second.zone_all, candidate_zone(second));
            result.second_decision = sd.kind;
            result.log.push_back(detail::make_record(2, data.size(), "all-comers", second,
                                                     second_name(sd.kind), false));
            if (sd.kind == SecondKind::StopFutility) {
                finish(final_after_early_stop());
                return result;
            }
            if (sd.kind == SecondKind::EnrichGo) {
                result.enriched = true;
                result.enriched_region = sd.region;
                enroll_enriched(cfg.max_n);
                final_enriched_analysis(3);
                return result;
            }
            enroll_all_comers(cfg.max_n);
            final_all_comers_analysis(3);
            return result;
        }
        case InterimKind::SecondInterimEnriched: {
            result.enriched = true;
            result.enriched_region = decision.region;
            enroll_enriched(cfg.first_interim + cfg.second_cohort);
            const AnalysisResult second =
                run_analysis(data, grid, cfg.analysis, rng.u64(), &result.enriched_region);
            const SecondDecision sd = second_interim_enriched(*second.zone_frozen, result.enriched_region);
            result.second_decision = sd.kind;
            result.log.push_back(detail::make_record(2, data.size(), "enriched", second,
                                                     second_name(sd.kind), true));
            if (sd.kind == SecondKind::StopFutility) {
                finish(final_after_early_stop());
                return result;
            }
            enroll_enriched(cfg.max_n);
            final_enriched_analysis(3);
            return result;
        }
    }
    return result;
}

// Interim-decision and final-recommendation frequencies over H replicates.
struct OperatingCharacteristics {
    int replicates = 0;
    std::array<long, 5> interim{};  // indexed by InterimKind
    std::array<long, 3> final_rec{};

    double pr_interim(InterimKind k) const {
        return static_cast<double>(interim[static_cast<std::size_t>(k)]) / replicates;
    }
    double pr_final(int a) const {
        return static_cast<double>(final_rec[static_cast<std::size_t>(a)]) / replicates;
    }
};

inline OperatingCharacteristics run_operating_characteristics(
    const ScenarioSpec& scenario, const TrialConfig& cfg, const EffectGrid& grid, int replicates,
    std::uint64_t master_seed, int threads, std::vector<TrialResult>* keep = nullptr) {
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    std::vector<TrialResult> results(static_cast<std::size_t>(replicates));
    parallel_for(replicates, threads, [&](int h) {
        results[static_cast<std::size_t>(h)] = simulate_trial(
            scenario, cfg, grid, Rng::stream_seed(master_seed, static_cast<std::uint64_t>(h)));
    });
    OperatingCharacteristics oc;
    oc.replicates = replicates;
    for (const auto& r : results) {
        ++oc.interim[static_cast<std::size_t>(r.first_decision)];
        ++oc.final_rec[static_cast<std::size_t>(r.final_a)];
    }
    if (keep) *keep = std::move(results);
    return oc;
}

// First-interim probability records: everything a (xi1, xi2) pair needs to
// classify the decision, so a calibration grid reuses one analysis pass.
struct FirstInterimRecord {
    double pr_lrv_all = 0.0, pr_tv_all = 0.0;
    bool has_candidate = false;
    double pr_lrv_sub = 0.0, pr_tv_sub = 0.0;
};

inline std::vector<FirstInterimRecord> first_interim_records(const ScenarioSpec& scenario,
                                                             const TrialConfig& cfg,
                                                             const EffectGrid& grid, int replicates,
                                                             std::uint64_t master_seed, int threads,
                                                             int n1_override = 0) {
    check_scenario(scenario);
    const int n1 = n1_override > 0 ? n1_override : cfg.first_interim;
    std::vector<FirstInterimRecord> records(static_cast<std::size_t>(replicates));
    parallel_for(replicates, threads, [&](int h) {
        Rng rng(Rng::stream_seed(master_seed, static_cast<std::uint64_t>(h)));
        TrialDataset data;
        data.panel = scenario.panel;
        data.arms = cfg.arms;
        data.outcome = OutcomeKind::Continuous;
        data.records.reserve(static_cast<std::size_t>(n1));
        for (int i = 0; i < n1; ++i) data.records.push_back(generate_patient(scenario, i, rng));
        const AnalysisResult analysis = run_analysis(data, grid, cfg.analysis, rng.u64());
        FirstInterimRecord rec;
        rec.pr_lrv_all = analysis.all_comers.pr_lrv;
        rec.pr_tv_all = analysis.all_comers.pr_tv;
        if (analysis.candidate) {
            rec.has_candidate = true;
            rec.pr_lrv_sub = analysis.candidate->pr_lrv;
            rec.pr_tv_sub = analysis.candidate->pr_tv;
        }
        records[static_cast<std::size_t>(h)] = rec;
    });
    return records;
}

inline InterimKind classify_first_interim(const FirstInterimRecord& rec, const Tpp& tpp) {
    const Zone zone_all = classify_zone(rec.pr_lrv_all, rec.pr_tv_all, tpp);
    std::optional<CandidateZone> candidate;
    if (rec.has_candidate) {
        CandidateZone c;
        c.zone = classify_zone(rec.pr_lrv_sub, rec.pr_tv_sub, tpp);
        c.region.mask.assign(1, 1);  // placeholder; only the kind matters here
        c.region.count = 1;
        candidate = c;
    }
    return interim_decision(zone_all, candidate).kind;
}

inline std::array<double, 5> first_interim_frequencies(const std::vector<FirstInterimRecord>& records,
                                                       const Tpp& tpp) {
    std::array<long, 5> counts{};
    for (const auto& rec : records)
        ++counts[static_cast<std::size_t>(classify_first_interim(rec, tpp))];
    std::array<double, 5> freq{};
    for (std::size_t i = 0; i < counts.size(); ++i)
        freq[i] = static_cast<double>(counts[i]) / static_cast<double>(records.size());
    return freq;
}

// Simulation-truth class of a scenario at a given LRV.
enum class TruthClass { Null, EffectiveSubgroup, EffectiveAllComers };

inline TruthClass classify_truth(const ScenarioSpec& scenario, double lrv) {
    const double inside = scenario.beta0 + scenario.beta1;
    const double outside = scenario.beta0;
    const bool heterogeneous = scenario.beta1 != 0.0 && !scenario.region.empty();
    if (!heterogeneous) return outside > lrv ? TruthClass::EffectiveAllComers : TruthClass::Null;
    if (inside > lrv && outside > lrv) return TruthClass::EffectiveAllComers;
    if (inside > lrv || outside > lrv) return TruthClass::EffectiveSubgroup;
    return TruthClass::Null;
}

// First-interim risk estimates over a scenario suite: each risk is the worst
// applicable scenario's frequency.
struct RiskEstimates {
    double fsr = 0.0;  // stop when a subgroup or all-comers truth is effective
    double fgr = 0.0;  // anything but stop under a null truth
    double fer = 0.0;  // enrich when the all-comers truth is effective
};

inline RiskEstimates risk_estimates(const std::vector<TruthClass>& truths,
                                    const std::vector<std::array<double, 5>>& freqs) {
    RiskEstimates risks;
    for (std::size_t s = 0; s < truths.size(); ++s) {
        const auto& f = freqs[s];
        const double pr_ears = f[static_cast<std::size_t>(InterimKind::StopFutility)];
        const double pr_enrich = f[static_cast<std::size_t>(InterimKind::EnrichGo)] +
                                 f[static_cast<std::size_t>(InterimKind::SecondInterimEnriched)];
        switch (truths[s]) {
            case TruthClass::Null:
                risks.fgr = std::max(risks.fgr, 1.0 - pr_ears);
                break;
            case TruthClass::EffectiveSubgroup:
                risks.fsr = std::max(risks.fsr, pr_ears);
                break;
            case TruthClass::EffectiveAllComers:
                risks.fsr = std::max(risks.fsr, pr_ears);
                risks.fer = std::max(risks.fer, pr_enrich);
                break;
        }
    }
    return risks;
}

struct RiskCaps {
    double fsr = 0.05;
    double fgr = 0.10;
    double fer = 0.15;
};

struct CalibrationRow {
    double xi1 = 0.0, xi2 = 0.0;
    RiskEstimates risks;
    bool admissible = false;
    std::vector<std::array<double, 5>> scenario_freqs;
};

struct CalibrationResult {
    std::vector<std::string> scenario_names;
    std::vector<TruthClass> truths;
    std::vector<CalibrationRow> rows;
    std::vector<std::pair<double, double>> admissible;
};

// Scan a (xi1, xi2) grid against the scenario suite's first-interim records
// and keep the pairs meeting every risk cap.
inline CalibrationResult calibrate_thresholds(const std::vector<ScenarioSpec>& scenarios,
                                              const TrialConfig& cfg, const EffectGrid& grid,
                                              const std::vector<double>& xi1_grid,
                                              const std::vector<double>& xi2_grid,
                                              const RiskCaps& caps, int replicates,
                                              std::uint64_t master_seed, int threads) {
    if (scenarios.empty()) throw ConfigError("calibration needs at least one scenario");
    CalibrationResult result;
    std::vector<std::vector<FirstInterimRecord>> records;
    records.reserve(scenarios.size());
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
        result.scenario_names.push_back(scenarios[s].name);
        result.truths.push_back(classify_truth(scenarios[s], cfg.analysis.tpp.lrv));
        records.push_back(first_interim_records(
            scenarios[s], cfg, grid, replicates,
            Rng::stream_seed(master_seed, 1000 + static_cast<std::uint64_t>(s)), threads));
    }
    for (double xi1 : xi1_grid) {
        for (double xi2 : xi2_grid) {
            Tpp tpp = cfg.analysis.tpp;
            tpp.xi1 = xi1;
            tpp.xi2 = xi2;
            CalibrationRow row;
            row.xi1 = xi1;
            row.xi2 = xi2;
            for (const auto& rec : records)
                row.scenario_freqs.push_back(first_interim_frequencies(rec, tpp));
            row.risks = risk_estimates(result.truths, row.scenario_freqs);
            row.admissible = row.risks.fsr <= caps.fsr && row.risks.fgr <= caps.fgr &&
                             row.risks.fer <= caps.fer;
            if (row.admissible) result.admissible.emplace_back(xi1, xi2);
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

struct SensitivityRow {
    int n1 = 0;
    std::array<double, 5> freq{};
};

// First-interim decision frequencies as the interim sample size varies.
inline std::vector<SensitivityRow> sensitivity_n1(const ScenarioSpec& scenario,
                                                  const TrialConfig& cfg, const EffectGrid& grid,
                                                  const std::vector<int>& n1_values, int replicates,
                                                  std::uint64_t master_seed, int threads) {
    std::vector<SensitivityRow> rows;
    for (std::size_t i = 0; i < n1_values.size(); ++i) {
        const int n1 = n1_values[i];
        if (n1 <= 0 || n1 >= cfg.max_n) throw ConfigError("sensitivity n1 values must satisfy 0 < n1 < N");
        const auto records = first_interim_records(
            scenario, cfg, grid, replicates,
            Rng::stream_seed(master_seed, 2000 + static_cast<std::uint64_t>(i)), threads, n1);
        SensitivityRow row;
        row.n1 = n1;
        row.freq = first_interim_frequencies(records, cfg.analysis.tpp);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace asied
