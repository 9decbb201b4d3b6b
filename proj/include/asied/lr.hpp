#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "asied/grid.hpp"
#include "asied/mcmc.hpp"
#include "asied/rng.hpp"
#include "asied/subgroup.hpp"
#include "asied/types.hpp"
#include "asied/util.hpp"

namespace asied {

// Bayesian linear regression comparator: y = b0 + b1 I(z=2) + alpha'x +
// gamma'(I(z=2) x) + eps, coefficients ~ N(0, scale I), 1/sigma^2 ~
// Gamma(shape, rate).
struct LrConfig {
    double coef_prior_scale = 20.0;
    double precision_shape = 0.1;
    double precision_rate = 0.1;
    ChainConfig chain;
};

inline void check_lr_config(const LrConfig& cfg) {
    if (!(cfg.coef_prior_scale > 0.0) || !(cfg.precision_shape > 0.0) ||
        !(cfg.precision_rate > 0.0))
        throw ConfigError("LR prior parameters must be positive");
    check_chain_config(cfg.chain);
}

// Posterior coefficient samples, flattened B x p with column layout
// [intercept, treatment, x_1..x_K, treatment*x_1..treatment*x_K].
struct LrDraws {
    int biomarkers = 0;
    int coefficients = 0;
    std::vector<double> coef;      // sample-major
    std::vector<double> sigma_sq;  // per sample

    int size() const { return static_cast<int>(sigma_sq.size()); }
    const double* sample(int b) const {
        return coef.data() + static_cast<std::size_t>(b) * coefficients;
    }
    // delta(x) = treatment main effect + interaction effects at x
    double effect(int b, const std::vector<double>& x) const {
        const double* c = sample(b);
        double v = c[1];
        for (int k = 0; k < biomarkers; ++k)
            v += c[2 + biomarkers + k] * x[static_cast<std::size_t>(k)];
        return v;
    }
};

// Coefficient full conditional given sigma^2: precision = X'X/sigma^2 +
// I/scale, mean = precision^{-1} X'y / sigma^2.
inline Eigen::VectorXd lr_coef_conditional_mean(const Eigen::MatrixXd& xtx,
                                                const Eigen::VectorXd& xty, double sigma_sq,
                                                const LrConfig& cfg) {
    Eigen::MatrixXd precision = xtx / sigma_sq;
    precision.diagonal().array() += 1.0 / cfg.coef_prior_scale;
    return precision.llt().solve(xty / sigma_sq);
}

// Conjugate Gibbs: coefficient block (multivariate normal) alternating with
// the residual precision (gamma). Deterministic given the chain seed.
inline LrDraws fit_lr(const TrialDataset& ds, const LrConfig& cfg) {
    check_lr_config(cfg);
    check_panel(ds.panel);
    if (ds.outcome != OutcomeKind::Continuous)
        throw ConfigError("the LR baseline supports continuous outcomes only");
    const ValidationReport report = validate_dataset(ds);
    if (!report.ok)
        throw ConfigError("dataset failed validation: " + report.violations.front().message);

    const int K = ds.panel.size();
    const int p = 2 + 2 * K;
    int n = 0;
    for (const auto& rec : ds.records)
        if (rec.y) ++n;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    int row = 0;
    for (const auto& rec : ds.records) {
        if (!rec.y) continue;
        const double treat = rec.arm == 2 ? 1.0 : 0.0;
        x(row, 0) = 1.0;
        x(row, 1) = treat;
        for (int k = 0; k < K; ++k) {
            x(row, 2 + k) = rec.x[static_cast<std::size_t>(k)];
            x(row, 2 + K + k) = treat * rec.x[static_cast<std::size_t>(k)];
        }
        y(row) = *rec.y;
        ++row;
    }
    const Eigen::MatrixXd xtx = x.transpose() * x;
    const Eigen::VectorXd xty = x.transpose() * y;
    const double yty = y.squaredNorm();

    Rng rng(cfg.chain.seed);
    LrDraws draws;
    draws.biomarkers = K;
    draws.coefficients = p;
    const int retained = (cfg.chain.iterations - cfg.chain.burnin) / cfg.chain.thinning;
    draws.coef.reserve(static_cast<std::size_t>(std::max(0, retained)) *
                       static_cast<std::size_t>(p));
    draws.sigma_sq.reserve(static_cast<std::size_t>(std::max(0, retained)));

    double sigma_sq = 1.0;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd z(p);
    for (int it = 1; it <= cfg.chain.iterations; ++it) {
        Eigen::MatrixXd precision = xtx / sigma_sq;
        precision.diagonal().array() += 1.0 / cfg.coef_prior_scale;
        const Eigen::LLT<Eigen::MatrixXd> llt(precision);
        const Eigen::VectorXd mean = llt.solve(xty / sigma_sq);
        for (int j = 0; j < p; ++j) z(j) = rng.normal(0.0, 1.0);
        // beta = mean + L^{-T} z has covariance precision^{-1}
        beta = mean + llt.matrixU().solve(z);
        const double rss = yty - 2.0 * beta.dot(xty) + beta.dot(xtx * beta);
        const double shape = cfg.precision_shape + 0.5 * n;
        const double rate = cfg.precision_rate + 0.5 * std::max(0.0, rss);
        sigma_sq = 1.0 / rng.gamma(shape, 1.0 / rate);
        if (it > cfg.chain.burnin && (it - cfg.chain.burnin) % cfg.chain.thinning == 0) {
            draws.coef.insert(draws.coef.end(), beta.data(), beta.data() + p);
            draws.sigma_sq.push_back(sigma_sq);
        }
    }
    return draws;
}

// Pointwise exceedance counts of the LR effect surface over the grid; the
// mean surface follows from the posterior-mean coefficients (the effect is
// affine per sample). Feeds the same Eq.-3 subgroup rule as the partition
// model.
inline PointwiseSummary lr_pointwise_summary(const LrDraws& draws, const EffectGrid& grid,
                                             double threshold) {
    if (draws.size() == 0) throw RuntimeFailure("LR summary needs a nonempty posterior");
    const int K = grid.axes();
    if (K != draws.biomarkers) throw ConfigError("grid and LR draws disagree on the panel");
    PointwiseSummary out;
    out.draws = draws.size();
    out.exceed_count.assign(static_cast<std::size_t>(grid.size), 0);
    out.mean.assign(static_cast<std::size_t>(grid.size), 0.0);

    std::vector<std::vector<double>> contrib(static_cast<std::size_t>(K));
    std::vector<double> mean_coef(static_cast<std::size_t>(K + 1), 0.0);
    for (int b = 0; b < draws.size(); ++b) {
        const double* c = draws.sample(b);
        mean_coef[0] += c[1];
        for (int k = 0; k < K; ++k) mean_coef[static_cast<std::size_t>(k + 1)] += c[2 + K + k];
    }
    for (auto& v : mean_coef) v /= draws.size();

    for (int b = 0; b < draws.size(); ++b) {
        const double* c = draws.sample(b);
        for (int k = 0; k < K; ++k) {
            const auto& vals = grid.axis_values[static_cast<std::size_t>(k)];
            auto& col = contrib[static_cast<std::size_t>(k)];
            col.resize(vals.size());
            for (std::size_t i = 0; i < vals.size(); ++i) col[i] = c[2 + K + k] * vals[i];
        }
        const double base = c[1];
        std::int32_t* counts = out.exceed_count.data();
        // nested scan keeps an additive prefix per axis
        std::int64_t d = 0;
        auto scan = [&](auto&& self, int axis, double acc) -> void {
            const auto& col = contrib[static_cast<std::size_t>(axis)];
            if (axis == K - 1) {
                for (double v : col) {
                    counts[d] += (acc + v >= threshold);
                    ++d;
                }
                return;
            }
            for (double v : col) self(self, axis + 1, acc + v);
        };
        scan(scan, 0, base);
    }
    std::vector<int> idx;
    for (std::int64_t d = 0; d < grid.size; ++d) {
        grid.decode(d, idx);
        double v = mean_coef[0];
        for (int k = 0; k < K; ++k)
            v += mean_coef[static_cast<std::size_t>(k + 1)] *
                 grid.axis_values[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
        out.mean[static_cast<std::size_t>(d)] = v;
    }
    return out;
}

// Region-average effect summaries: the average of an affine surface over a
// region is affine in the region's coordinate means.
inline RegionSummary lr_region_summary(const LrDraws& draws, const EffectGrid& grid,
                                       const GridRegion& region,
                                       std::span<const double> thresholds) {
    if (region.empty()) throw RuntimeFailure("subgroup effect requires a nonempty region");
    const int K = grid.axes();
    std::vector<double> center(static_cast<std::size_t>(K), 0.0);
    std::vector<int> idx;
    for (std::int64_t d = 0; d < grid.size; ++d) {
        if (!region.contains(d)) continue;
        grid.decode(d, idx);
        for (int k = 0; k < K; ++k)
            center[static_cast<std::size_t>(k)] +=
                grid.axis_values[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
    }
    for (auto& v : center) v /= static_cast<double>(region.count);

    RegionSummary out;
    out.exceed_prob.assign(thresholds.size(), 0.0);
    std::vector<std::int64_t> counts(thresholds.size(), 0);
    double mean_sum = 0.0;
    for (int b = 0; b < draws.size(); ++b) {
        const double avg = draws.effect(b, center);
        mean_sum += avg;
        for (std::size_t j = 0; j < thresholds.size(); ++j)
            if (avg >= thresholds[j]) ++counts[j];
    }
    for (std::size_t j = 0; j < thresholds.size(); ++j)
        out.exceed_prob[j] = static_cast<double>(counts[j]) / draws.size();
    out.mean = mean_sum / draws.size();
    return out;
}

}  // namespace asied
