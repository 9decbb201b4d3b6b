#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asied/decision.hpp"
#include "asied/grid.hpp"
#include "asied/mcmc.hpp"
#include "asied/subgroup.hpp"

namespace asied {

// Everything one interim/final analysis needs besides the data and the grid.
struct AnalysisSettings {
    Tpp tpp;
    double candidate_xi = 0.9;  // effective-subgroup confidence (Eq.-3 style rule)
    ChainConfig chain;
    std::vector<double> nu;  // partition selection probabilities; empty = uniform
    // conjugate hyperparameters
    double beta_a = 1.0, beta_b = 1.0;
    double kappa0 = 0.1, nu0 = 1.0;
    bool empirical_center = true;  // theta0/sigma0_sq from the analysis data
    double theta0 = 0.0, sigma0_sq = 1.0;

    PartitionPriorParams prior_params(int biomarkers) const {
        if (nu.empty()) return PartitionPriorParams::uniform(biomarkers);
        PartitionPriorParams p;
        p.nu = nu;
        return p;
    }

    ConjugateConfig conjugate_for(const TrialDataset& ds) const {
        if (ds.outcome == OutcomeKind::Binary) {
            ConjugateConfig c;
            c.beta_a.assign(static_cast<std::size_t>(ds.arms), beta_a);
            c.beta_b.assign(static_cast<std::size_t>(ds.arms), beta_b);
            return c;
        }
        ConjugateConfig c;
        c.kappa0 = kappa0;
        c.nu0 = nu0;
        c.theta0 = theta0;
        c.sigma0_sq = sigma0_sq;
        if (empirical_center) {
            double sum = 0.0, sumsq = 0.0;
            int n = 0;
            for (const auto& rec : ds.records) {
                if (!rec.y) continue;
                sum += *rec.y;
                sumsq += *rec.y * *rec.y;
                ++n;
            }
            if (n > 0) {
                c.theta0 = sum / n;
                if (n > 1) {
                    const double var = (sumsq - sum * c.theta0) / (n - 1);
                    if (var > 0.0 && std::isfinite(var)) c.sigma0_sq = var;
                }
            }
        }
        return c;
    }
};

struct AnalysisResult {
    SubgroupReport all_comers;               // region = whole grid
    GridRegion eq3_region;                   // effective subgroup at candidate_xi
    std::optional<SubgroupReport> candidate; // Eq.-3 region or posterior-mean fallback
    bool candidate_fallback = false;
    std::optional<SubgroupReport> frozen;    // requested enriched region, if any
    Zone zone_all = Zone::Stop;
    std::optional<Zone> zone_candidate;
    std::optional<Zone> zone_frozen;
    PointwiseSummary pointwise;              // exceedance counts vs LRV + mean effect
    std::map<std::string, int> structure_freq;
    int draws = 0;
};

// Fit the partition model on the accumulated data and summarize it on the
// grid: all-comers zone, candidate subgroup (effective subgroup at xi, or
// the posterior-mean fallback region when that is empty), and the frozen
// enrichment region's zone when one is supplied.
inline AnalysisResult run_analysis(const TrialDataset& ds, const EffectGrid& grid,
                                   const AnalysisSettings& settings, std::uint64_t chain_seed,
                                   const GridRegion* frozen_region = nullptr) {
    check_tpp(settings.tpp);
    ChainConfig chain = settings.chain;
    chain.seed = chain_seed;
    const PartitionPriorParams prior = settings.prior_params(ds.panel.size());
    const ConjugateConfig conj = settings.conjugate_for(ds);
    const PosteriorDraws draws = run_chain(ds, prior, conj, chain);
    const EffectSamples effects = effect_samples(draws, grid);

    AnalysisResult result;
    result.draws = draws.size();
    for (const auto& s : draws.samples) ++result.structure_freq[structure_signature(s.tree)];

    const double thresholds[] = {settings.tpp.lrv, settings.tpp.tv};
    const GridRegion omega = GridRegion::all(grid);
    const RegionSummary all = region_summary(effects, omega, thresholds);
    result.all_comers = {omega, all.exceed_prob[0], all.exceed_prob[1], all.mean};
    result.zone_all = classify_zone(result.all_comers.pr_lrv, result.all_comers.pr_tv, settings.tpp);

    result.pointwise = pointwise_summary(effects, settings.tpp.lrv);
    result.eq3_region = effective_subgroup_from_counts(grid, result.pointwise, settings.candidate_xi);

    GridRegion candidate_region = result.eq3_region;
    if (candidate_region.empty()) {
        // fallback: grid points whose posterior mean effect clears LRV
        GridRegion fallback = GridRegion::none(grid);
        for (std::int64_t d = 0; d < grid.size; ++d)
            if (result.pointwise.mean[static_cast<std::size_t>(d)] >= settings.tpp.lrv)
                fallback.add(d);
        if (!fallback.empty()) {
            candidate_region = fallback;
            result.candidate_fallback = true;
        }
    }
    if (!candidate_region.empty()) {
        const RegionSummary sub = region_summary(effects, candidate_region, thresholds);
        result.candidate = SubgroupReport{candidate_region, sub.exceed_prob[0], sub.exceed_prob[1], sub.mean};
        result.zone_candidate = classify_zone(sub.exceed_prob[0], sub.exceed_prob[1], settings.tpp);
    }
    if (frozen_region != nullptr && !frozen_region->empty()) {
        const RegionSummary fro = region_summary(effects, *frozen_region, thresholds);
        result.frozen = SubgroupReport{*frozen_region, fro.exceed_prob[0], fro.exceed_prob[1], fro.mean};
        result.zone_frozen = classify_zone(fro.exceed_prob[0], fro.exceed_prob[1], settings.tpp);
    }
    return result;
}

inline std::optional<CandidateZone> candidate_zone(const AnalysisResult& result) {
    if (!result.candidate) return std::nullopt;
    return CandidateZone{result.candidate->region, *result.zone_candidate};
}

}  // namespace asied
