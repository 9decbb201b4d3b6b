#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "asied/grid.hpp"
#include "asied/mcmc.hpp"
#include "asied/util.hpp"

namespace asied {

// A partition tree reduced to its action on the grid: thresholds become
// axis-index cuts, so two draws that split the grid identically share one
// entry. All grid summaries computed through this form are exact.
struct QuantizedSplit {
    int axis = 0;
    bool by_mask = false;     // categorical
    std::int32_t cut = 0;     // left iff axis index < cut
    std::uint32_t mask = 0;   // left iff level-index bit set

    bool left_of(int idx) const {
        return by_mask ? ((mask >> idx) & 1u) != 0 : idx < cut;
    }
};

struct QuantizedTree {
    bool has_root = false;
    bool has_left = false;
    bool has_right = false;
    QuantizedSplit root, left, right;
    int leaves = 1;

    int leaf_of(const int* idx) const {
        if (!has_root) return 0;
        if (root.left_of(idx[root.axis])) {
            if (!has_left) return 0;
            return left.left_of(idx[left.axis]) ? 0 : 1;
        }
        const int base = has_left ? 2 : 1;
        if (!has_right) return base;
        return right.left_of(idx[right.axis]) ? base : base + 1;
    }

    std::array<std::uint64_t, 3> key() const {
        auto pack = [](bool present, const QuantizedSplit& s) -> std::uint64_t {
            if (!present) return ~std::uint64_t{0};
            return (static_cast<std::uint64_t>(s.axis) << 40) |
                   (static_cast<std::uint64_t>(s.by_mask) << 32) |
                   static_cast<std::uint64_t>(s.by_mask ? s.mask
                                                        : static_cast<std::uint32_t>(s.cut));
        };
        return {pack(has_root, root), pack(has_left, left), pack(has_right, right)};
    }
};

namespace detail {

inline QuantizedSplit quantize_split(const EffectGrid& grid, const SplitRule& rule) {
    QuantizedSplit q;
    q.axis = rule.biomarker;
    const auto& kind = grid.panel.kinds[static_cast<std::size_t>(rule.biomarker)];
    const auto& vals = grid.axis_values[static_cast<std::size_t>(rule.biomarker)];
    switch (kind.type) {
        case BiomarkerType::Continuous:
            q.cut = static_cast<std::int32_t>(
                std::upper_bound(vals.begin(), vals.end(), rule.threshold) - vals.begin());
            break;
        case BiomarkerType::Binary:
            q.cut = 1;
            break;
        case BiomarkerType::Ordinal:
            q.cut = rule.cutoff;  // level v sits at index v-1
            break;
        case BiomarkerType::Categorical:
            q.by_mask = true;
            q.mask = rule.subset;
            break;
    }
    return q;
}

inline QuantizedTree quantize_tree(const EffectGrid& grid, const PartitionTree& tree) {
    QuantizedTree q;
    if (!tree.root) return q;
    q.has_root = true;
    q.root = quantize_split(grid, tree.root->rule);
    if (tree.root->left) {
        q.has_left = true;
        q.left = quantize_split(grid, *tree.root->left);
    }
    if (tree.root->right) {
        q.has_right = true;
        q.right = quantize_split(grid, *tree.root->right);
    }
    q.leaves = tree.leaf_count();
    return q;
}

struct QKeyHash {
    std::size_t operator()(const std::array<std::uint64_t, 3>& k) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (std::uint64_t v : k) {
            h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

// Visit every grid point in row-major order with its leaf under `tree`.
template <typename Fn>
inline void for_each_leaf(const EffectGrid& grid, const QuantizedTree& tree, Fn&& fn) {
    const int K = grid.axes();
    std::vector<int> idx(static_cast<std::size_t>(K), 0);
    std::vector<int> sizes(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) sizes[static_cast<std::size_t>(k)] = static_cast<int>(grid.axis_size(k));
    for (std::int64_t d = 0; d < grid.size; ++d) {
        fn(d, tree.leaf_of(idx.data()));
        for (int k = K - 1; k >= 0; --k) {
            if (++idx[static_cast<std::size_t>(k)] < sizes[static_cast<std::size_t>(k)]) break;
            idx[static_cast<std::size_t>(k)] = 0;
        }
    }
}

}  // namespace detail

// Posterior per-grid-point treatment-effect samples delta_d^(b) =
// theta_{2,m(d)}^(b) - theta_{1,m(d)}^(b), stored as per-leaf values plus a
// pool of distinct grid-quantized trees (the matrix is piecewise constant
// with at most four pieces per sample).
struct EffectSamples {
    const EffectGrid* grid = nullptr;
    std::vector<QuantizedTree> pool;
    struct Sample {
        std::int32_t tree = 0;
        std::array<double, 4> delta{};
    };
    std::vector<Sample> samples;

    int size() const { return static_cast<int>(samples.size()); }

    // Exact delta for one (sample, grid point); oracle/diagnostic path.
    double delta(int b, std::int64_t d) const {
        std::vector<int> idx;
        grid->decode(d, idx);
        const auto& s = samples[static_cast<std::size_t>(b)];
        return s.delta[static_cast<std::size_t>(
            pool[static_cast<std::size_t>(s.tree)].leaf_of(idx.data()))];
    }
};

inline EffectSamples effect_samples(const PosteriorDraws& draws, const EffectGrid& grid,
                                    int treatment_arm = 2, int control_arm = 1) {
    if (draws.samples.empty()) throw RuntimeFailure("effect_samples needs a nonempty posterior");
    EffectSamples out;
    out.grid = &grid;
    out.samples.reserve(draws.samples.size());
    std::unordered_map<std::array<std::uint64_t, 3>, std::int32_t, detail::QKeyHash> seen;
    for (const auto& draw : draws.samples) {
        QuantizedTree q = detail::quantize_tree(grid, draw.tree);
        const auto key = q.key();
        auto [it, inserted] = seen.emplace(key, static_cast<std::int32_t>(out.pool.size()));
        if (inserted) out.pool.push_back(q);
        EffectSamples::Sample s;
        s.tree = it->second;
        for (int m = 0; m < q.leaves; ++m)
            s.delta[static_cast<std::size_t>(m)] =
                draw.params.at(treatment_arm - 1, m) - draw.params.at(control_arm - 1, m);
        out.samples.push_back(s);
    }
    return out;
}

// Pointwise posterior summaries over the grid: exceedance counts against a
// threshold (exact integer counts over B) and the posterior mean effect.
struct PointwiseSummary {
    std::vector<std::int32_t> exceed_count;
    std::vector<double> mean;
    int draws = 0;

    double exceed_frac(std::int64_t d) const {
        return static_cast<double>(exceed_count[static_cast<std::size_t>(d)]) / draws;
    }
};

inline PointwiseSummary pointwise_summary(const EffectSamples& effects, double threshold) {
    const EffectGrid& grid = *effects.grid;
    PointwiseSummary out;
    out.draws = effects.size();
    out.exceed_count.assign(static_cast<std::size_t>(grid.size), 0);
    out.mean.assign(static_cast<std::size_t>(grid.size), 0.0);
    // per distinct tree: per-leaf pass counts and effect sums
    std::vector<std::array<std::int32_t, 4>> pass(effects.pool.size(), {0, 0, 0, 0});
    std::vector<std::array<double, 4>> sums(effects.pool.size(), {0.0, 0.0, 0.0, 0.0});
    for (const auto& s : effects.samples) {
        const int leaves = effects.pool[static_cast<std::size_t>(s.tree)].leaves;
        for (int m = 0; m < leaves; ++m) {
            if (s.delta[static_cast<std::size_t>(m)] >= threshold)
                ++pass[static_cast<std::size_t>(s.tree)][static_cast<std::size_t>(m)];
            sums[static_cast<std::size_t>(s.tree)][static_cast<std::size_t>(m)] +=
                s.delta[static_cast<std::size_t>(m)];
        }
    }
    for (std::size_t t = 0; t < effects.pool.size(); ++t) {
        const auto& cnt = pass[t];
        const auto& sum = sums[t];
        detail::for_each_leaf(grid, effects.pool[t], [&](std::int64_t d, int leaf) {
            out.exceed_count[static_cast<std::size_t>(d)] += cnt[static_cast<std::size_t>(leaf)];
            out.mean[static_cast<std::size_t>(d)] += sum[static_cast<std::size_t>(leaf)];
        });
    }
    const double inv_b = 1.0 / effects.size();
    for (auto& v : out.mean) v *= inv_b;
    return out;
}

// Per-sample region-average effects delta_Delta^(b), reduced to exceedance
// fractions against each threshold plus the posterior mean.
struct RegionSummary {
    std::vector<double> exceed_prob;  // aligned with the query thresholds
    double mean = 0.0;
};

inline RegionSummary region_summary(const EffectSamples& effects, const GridRegion& region,
                                    std::span<const double> thresholds) {
    if (region.empty()) throw RuntimeFailure("subgroup effect requires a nonempty region");
    const EffectGrid& grid = *effects.grid;
    // per distinct tree: number of region points per leaf
    std::vector<std::array<std::int64_t, 4>> weight(effects.pool.size(), {0, 0, 0, 0});
    if (region.count == grid.size) {
        for (std::size_t t = 0; t < effects.pool.size(); ++t)
            detail::for_each_leaf(grid, effects.pool[t], [&](std::int64_t, int leaf) {
                ++weight[t][static_cast<std::size_t>(leaf)];
            });
    } else {
        std::vector<int> idx;
        for (std::int64_t d = 0; d < grid.size; ++d) {
            if (!region.contains(d)) continue;
            grid.decode(d, idx);
            for (std::size_t t = 0; t < effects.pool.size(); ++t)
                ++weight[t][static_cast<std::size_t>(effects.pool[t].leaf_of(idx.data()))];
        }
    }
    RegionSummary out;
    out.exceed_prob.assign(thresholds.size(), 0.0);
    std::vector<std::int64_t> counts(thresholds.size(), 0);
    double mean_sum = 0.0;
    const double inv_n = 1.0 / static_cast<double>(region.count);
    for (const auto& s : effects.samples) {
        const auto& w = weight[static_cast<std::size_t>(s.tree)];
        double avg = 0.0;
        for (int m = 0; m < 4; ++m)
            avg += static_cast<double>(w[static_cast<std::size_t>(m)]) *
                   s.delta[static_cast<std::size_t>(m)];
        avg *= inv_n;
        mean_sum += avg;
        for (std::size_t j = 0; j < thresholds.size(); ++j)
            if (avg >= thresholds[j]) ++counts[j];
    }
    for (std::size_t j = 0; j < thresholds.size(); ++j)
        out.exceed_prob[j] = static_cast<double>(counts[j]) / effects.size();
    out.mean = mean_sum / effects.size();
    return out;
}

// Pr(delta_Delta >= threshold).
inline double subgroup_effect_prob(const EffectSamples& effects, const GridRegion& region,
                                   double threshold) {
    const double thr[] = {threshold};
    return region_summary(effects, region, thr).exceed_prob[0];
}

// Effective subgroup: grid points whose exceedance fraction against LRV is
// strictly above xi.
inline GridRegion extract_effective_subgroup(const EffectSamples& effects, double lrv, double xi) {
    if (!(xi > 0.0 && xi < 1.0)) throw ConfigError("confidence xi must lie in (0,1)");
    const PointwiseSummary pw = pointwise_summary(effects, lrv);
    GridRegion region = GridRegion::none(*effects.grid);
    for (std::int64_t d = 0; d < effects.grid->size; ++d)
        if (pw.exceed_frac(d) > xi) region.add(d);
    return region;
}

inline GridRegion effective_subgroup_from_counts(const EffectGrid& grid,
                                                 const PointwiseSummary& pw, double xi) {
    GridRegion region = GridRegion::none(grid);
    for (std::int64_t d = 0; d < grid.size; ++d)
        if (pw.exceed_frac(d) > xi) region.add(d);
    return region;
}

// Repeated-trial aggregation: points inside the per-trial effective subgroup
// in strictly more than `level` of the trials.
inline GridRegion aggregate_repeated(const std::vector<GridRegion>& per_trial,
                                     const EffectGrid& grid, double level = 0.9) {
    if (per_trial.empty()) throw ConfigError("aggregation needs at least one trial");
    std::vector<std::int32_t> counts(static_cast<std::size_t>(grid.size), 0);
    for (const auto& region : per_trial)
        for (std::int64_t d = 0; d < grid.size; ++d)
            if (region.contains(d)) ++counts[static_cast<std::size_t>(d)];
    const double h = static_cast<double>(per_trial.size());
    GridRegion out = GridRegion::none(grid);
    for (std::int64_t d = 0; d < grid.size; ++d)
        if (static_cast<double>(counts[static_cast<std::size_t>(d)]) / h > level) out.add(d);
    return out;
}

// True-positive / true-negative rates of an estimated region against the
// scenario truth; a rate is absent when its denominator is empty.
struct TprTnr {
    std::optional<double> tpr;
    std::optional<double> tnr;
};

inline TprTnr tpr_tnr(const GridRegion& estimated, const GridRegion& truth,
                      const EffectGrid& grid) {
    std::int64_t tp = 0, tn = 0;
    for (std::int64_t d = 0; d < grid.size; ++d) {
        const bool in_truth = truth.contains(d);
        const bool in_est = estimated.contains(d);
        if (in_truth && in_est) ++tp;
        if (!in_truth && !in_est) ++tn;
    }
    TprTnr out;
    if (truth.count > 0) out.tpr = static_cast<double>(tp) / truth.count;
    if (truth.count < grid.size)
        out.tnr = static_cast<double>(tn) / (grid.size - truth.count);
    return out;
}

// Mean per-trial rates, the Table-1 style aggregation.
inline TprTnr aggregate_tpr_tnr(const std::vector<GridRegion>& per_trial, const GridRegion& truth,
                                const EffectGrid& grid) {
    double tpr_sum = 0.0, tnr_sum = 0.0;
    for (const auto& region : per_trial) {
        const TprTnr one = tpr_tnr(region, truth, grid);
        if (one.tpr) tpr_sum += *one.tpr;
        if (one.tnr) tnr_sum += *one.tnr;
    }
    TprTnr out;
    const double h = static_cast<double>(per_trial.size());
    if (truth.count > 0) out.tpr = tpr_sum / h;
    if (truth.count < grid.size) out.tnr = tnr_sum / h;
    return out;
}

// One region's decision-ready summary.
struct SubgroupReport {
    GridRegion region;
    double pr_lrv = 0.0;
    double pr_tv = 0.0;
    double mean = 0.0;
};

}  // namespace asied
