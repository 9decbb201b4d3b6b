#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "asied/partition.hpp"
#include "asied/rng.hpp"
#include "asied/types.hpp"
#include "asied/util.hpp"

namespace asied {

// Conjugate hyperparameters. Binary outcomes: per-arm Beta(a_t, b_t).
// Continuous outcomes: theta_{t,m} | sigma^2 ~ N(theta0, sigma^2/kappa0) and
// sigma^2 ~ IG(nu0/2, ss0/2) with ss0 = nu0 * sigma0_sq, sigma^2 shared
// across all cells.
struct ConjugateConfig {
    std::vector<double> beta_a, beta_b;  // size T (binary outcomes)
    double theta0 = 0.0;
    double kappa0 = 0.1;
    double nu0 = 1.0;
    double sigma0_sq = 1.0;

    double ss0() const { return nu0 * sigma0_sq; }

    static ConjugateConfig binary_uniform(int arms) {
        ConjugateConfig c;
        c.beta_a.assign(static_cast<std::size_t>(arms), 1.0);
        c.beta_b.assign(static_cast<std::size_t>(arms), 1.0);
        return c;
    }
};

inline void check_conjugate(const ConjugateConfig& cfg, OutcomeKind kind, int arms) {
    if (kind == OutcomeKind::Binary) {
        if (static_cast<int>(cfg.beta_a.size()) != arms ||
            static_cast<int>(cfg.beta_b.size()) != arms)
            throw ConfigError("binary conjugate prior needs per-arm (a_t, b_t)");
        for (int t = 0; t < arms; ++t)
            if (!(cfg.beta_a[static_cast<std::size_t>(t)] > 0.0) ||
                !(cfg.beta_b[static_cast<std::size_t>(t)] > 0.0))
                throw ConfigError("beta prior parameters must be positive");
    } else {
        if (!(cfg.kappa0 > 0.0) || !(cfg.nu0 > 0.0) || !(cfg.sigma0_sq > 0.0) ||
            !std::isfinite(cfg.theta0))
            throw ConfigError("continuous conjugate prior parameters must be positive and finite");
    }
}

// Per (arm, subgroup) sufficient statistics; cell (t, m) lives at t*M + m.
struct CellStats {
    OutcomeKind kind = OutcomeKind::Continuous;
    int arms = 0;
    int groups = 0;
    std::vector<int> ones, zeros;          // binary
    std::vector<int> count;                // continuous
    std::vector<double> sum, sumsq;        // continuous

    int cell(int arm, int group) const { return arm * groups + group; }
    int cells() const { return arms * groups; }
};

inline CellStats suff_stats(const TrialDataset& ds, const PartitionTree& tree) {
    CellStats stats;
    stats.kind = ds.outcome;
    stats.arms = ds.arms;
    stats.groups = tree.leaf_count();
    const std::size_t n_cells = static_cast<std::size_t>(stats.cells());
    if (ds.outcome == OutcomeKind::Binary) {
        stats.ones.assign(n_cells, 0);
        stats.zeros.assign(n_cells, 0);
    } else {
        stats.count.assign(n_cells, 0);
        stats.sum.assign(n_cells, 0.0);
        stats.sumsq.assign(n_cells, 0.0);
    }
    for (const auto& rec : ds.records) {
        if (!rec.y) continue;
        const int m = assign(ds.panel, tree, rec.x);
        const std::size_t c = static_cast<std::size_t>(stats.cell(rec.arm - 1, m));
        if (ds.outcome == OutcomeKind::Binary) {
            if (*rec.y != 0.0) {
                ++stats.ones[c];
            } else {
                ++stats.zeros[c];
            }
        } else {
            ++stats.count[c];
            stats.sum[c] += *rec.y;
            stats.sumsq[c] += *rec.y * *rec.y;
        }
    }
    return stats;
}

// Collapsed marginal likelihood log p(Y | partition) with all cell parameters
// (and, for continuous outcomes, the shared sigma^2) integrated out.
inline double log_marginal(const CellStats& stats, const ConjugateConfig& cfg) {
    if (stats.kind == OutcomeKind::Binary) {
        double total = 0.0;
        for (int t = 0; t < stats.arms; ++t) {
            const double a = cfg.beta_a[static_cast<std::size_t>(t)];
            const double b = cfg.beta_b[static_cast<std::size_t>(t)];
            const double lb0 = log_beta_fn(a, b);
            for (int m = 0; m < stats.groups; ++m) {
                const std::size_t c = static_cast<std::size_t>(stats.cell(t, m));
                if (stats.ones[c] == 0 && stats.zeros[c] == 0) continue;
                total += log_beta_fn(a + stats.ones[c], b + stats.zeros[c]) - lb0;
            }
        }
        return total;
    }
    // Continuous: p(Y | sigma^2) is a product of per-cell shrunken Gaussian
    // factors; the shared sigma^2 then integrates against its inverse gamma.
    int n = 0;
    double half_log_shrink = 0.0;
    double a_term = 0.0;  // sum of within-cell SSE plus shrinkage penalties
    for (std::size_t c = 0; c < stats.count.size(); ++c) {
        const int nc = stats.count[c];
        if (nc == 0) continue;
        if (!std::isfinite(stats.sum[c]) || !std::isfinite(stats.sumsq[c]))
            throw RuntimeFailure("non-finite sufficient statistics");
        n += nc;
        const double mean = stats.sum[c] / nc;
        const double sse = std::max(0.0, stats.sumsq[c] - stats.sum[c] * mean);
        const double w = cfg.kappa0 * nc / (cfg.kappa0 + nc);
        a_term += sse + w * (mean - cfg.theta0) * (mean - cfg.theta0);
        half_log_shrink += 0.5 * std::log(cfg.kappa0 / (cfg.kappa0 + nc));
    }
    if (n == 0) return 0.0;
    const double half_nu0 = 0.5 * cfg.nu0;
    const double half_nun = 0.5 * (cfg.nu0 + n);
    return -0.5 * n * std::log(2.0 * M_PI) + half_log_shrink +
           half_nu0 * std::log(0.5 * cfg.ss0()) - log_gamma_fn(half_nu0) +
           log_gamma_fn(half_nun) - half_nun * std::log(0.5 * (cfg.ss0() + a_term));
}

// Posterior Beta parameters per cell, (n_{tm1}+a_t, n_{tm0}+b_t).
inline std::vector<std::pair<double, double>> beta_posterior_params(const CellStats& stats,
                                                                    const ConjugateConfig& cfg) {
    std::vector<std::pair<double, double>> out(static_cast<std::size_t>(stats.cells()));
    for (int t = 0; t < stats.arms; ++t)
        for (int m = 0; m < stats.groups; ++m) {
            const std::size_t c = static_cast<std::size_t>(stats.cell(t, m));
            out[c] = {cfg.beta_a[static_cast<std::size_t>(t)] + stats.ones[c],
                      cfg.beta_b[static_cast<std::size_t>(t)] + stats.zeros[c]};
        }
    return out;
}

// Cell parameters theta_{t,m} plus the shared sigma^2 (continuous only).
struct CellParams {
    int arms = 0;
    int groups = 0;
    std::vector<double> theta;
    double sigma_sq = 1.0;

    double at(int arm, int group) const {
        return theta[static_cast<std::size_t>(arm * groups + group)];
    }
};

// Exact joint posterior draw given the partition: binary cells are
// independent Betas; continuous draws sigma^2 from its theta-collapsed
// inverse-gamma full conditional, then each theta given sigma^2.
inline CellParams draw_cell_params(const CellStats& stats, const ConjugateConfig& cfg, Rng& rng) {
    CellParams params;
    params.arms = stats.arms;
    params.groups = stats.groups;
    params.theta.resize(static_cast<std::size_t>(stats.cells()));
    if (stats.kind == OutcomeKind::Binary) {
        for (int t = 0; t < stats.arms; ++t)
            for (int m = 0; m < stats.groups; ++m) {
                const std::size_t c = static_cast<std::size_t>(stats.cell(t, m));
                params.theta[c] = rng.beta(cfg.beta_a[static_cast<std::size_t>(t)] + stats.ones[c],
                                           cfg.beta_b[static_cast<std::size_t>(t)] + stats.zeros[c]);
            }
        return params;
    }
    int n = 0;
    double a_term = 0.0;
    for (std::size_t c = 0; c < stats.count.size(); ++c) {
        const int nc = stats.count[c];
        if (nc == 0) continue;
        n += nc;
        const double mean = stats.sum[c] / nc;
        const double sse = std::max(0.0, stats.sumsq[c] - stats.sum[c] * mean);
        const double w = cfg.kappa0 * nc / (cfg.kappa0 + nc);
        a_term += sse + w * (mean - cfg.theta0) * (mean - cfg.theta0);
    }
    params.sigma_sq = rng.inverse_gamma(0.5 * (cfg.nu0 + n), 0.5 * (cfg.ss0() + a_term));
    for (std::size_t c = 0; c < stats.count.size(); ++c) {
        const double nc = stats.count[c];
        const double post_mean = (cfg.kappa0 * cfg.theta0 + stats.sum[c]) / (cfg.kappa0 + nc);
        params.theta[c] = rng.normal(post_mean, std::sqrt(params.sigma_sq / (cfg.kappa0 + nc)));
    }
    return params;
}

}  // namespace asied
