#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "asied/likelihood.hpp"
#include "asied/partition.hpp"
#include "asied/rng.hpp"
#include "asied/types.hpp"
#include "asied/util.hpp"

namespace asied {

struct ChainConfig {
    int iterations = 5000;
    int burnin = 2000;
    int thinning = 1;
    std::uint64_t seed = 0;
    double walk_sd_frac = 0.1;  // continuous-threshold random-walk SD, fraction of range
};

inline void check_chain_config(const ChainConfig& cfg) {
    if (cfg.iterations <= 0) throw ConfigError("chain iterations must be positive");
    if (cfg.burnin < 0 || cfg.burnin >= cfg.iterations)
        throw ConfigError("burn-in must be in [0, iterations)");
    if (cfg.thinning < 1) throw ConfigError("thinning must be >= 1");
    if (!(cfg.walk_sd_frac > 0.0)) throw ConfigError("walk_sd_frac must be positive");
}

struct PosteriorDraw {
    PartitionTree tree;
    CellParams params;
};

struct PosteriorDraws {
    std::vector<PosteriorDraw> samples;
    std::vector<double> log_post_trace;  // per retained sample
    long threshold_proposals = 0;
    long threshold_accepts = 0;
    long structure_proposals = 0;
    long structure_accepts = 0;

    int size() const { return static_cast<int>(samples.size()); }
};

// Current partition plus its cached collapsed marginal and prior density.
struct ChainState {
    PartitionTree tree;
    double log_marg = 0.0;
    double log_prior = 0.0;
};

namespace detail {

// Reflect v into [lo, hi].
inline double reflect_into(double v, double lo, double hi) {
    const double w = hi - lo;
    if (w <= 0.0) return lo;
    double t = std::fmod(v - lo, 2.0 * w);
    if (t < 0.0) t += 2.0 * w;
    return lo + (t <= w ? t : 2.0 * w - t);
}

// Symmetric proposal from the node's valid payload set; nullopt when the
// rule carries no payload (binary). Continuous thresholds take a random-walk
// step reflected into the node's admissible interval; discrete payloads are
// re-drawn uniformly from the menu.
inline std::optional<SplitRule> propose_payload(const BiomarkerPanel& panel,
                                                const SplitSupport& support,
                                                const Region& node_region, const SplitRule& rule,
                                                double walk_sd_frac, Rng& rng) {
    const int k = rule.biomarker;
    const auto& kind = panel.kinds[static_cast<std::size_t>(k)];
    if (kind.is_binary()) return std::nullopt;
    const NodeData data = node_data(panel, support, node_region);
    const PayloadSpace ps = payload_space(kind, node_region.axes[static_cast<std::size_t>(k)],
                                          data.lo[static_cast<std::size_t>(k)],
                                          data.hi[static_cast<std::size_t>(k)],
                                          data.present[static_cast<std::size_t>(k)]);
    SplitRule next = rule;
    switch (kind.type) {
        case BiomarkerType::Continuous: {
            const double sd = walk_sd_frac * (ps.hi - ps.lo);
            next.threshold = reflect_into(rule.threshold + rng.normal(0.0, sd), ps.lo, ps.hi);
            break;
        }
        case BiomarkerType::Ordinal:
            next.cutoff = ps.cut_lo + rng.uniform_int(ps.cut_hi - ps.cut_lo + 1);
            break;
        case BiomarkerType::Categorical:
            next.subset = sample_categorical_payload(ps, rng);
            break;
        case BiomarkerType::Binary:
            break;
    }
    return next;
}

// ---- informed joint (biomarker, payload) proposals --------------------------
//
// Independence proposals drawn from the prior almost never carry competitive
// thresholds once the chain has tuned the current tree, so structure moves
// would stall. The joint move therefore keeps the prior's stop/biomarker
// selection menus but draws each payload from a marginal-weighted candidate
// distribution (mixed with the prior for full support). The proposal density
// is exactly evaluable, so the acceptance ratio stays exact.

constexpr double kPayloadMixPrior = 0.2;  // mass kept on the prior payload law
constexpr int kMaxScoredSubsets = 128;

// Relative collapsed marginal of a tree as a function of one node's payload,
// with every other cell held fixed. Terms shared by all candidates for the
// node are dropped.
struct SplitScorer {
    OutcomeKind kind = OutcomeKind::Continuous;
    int arms = 2;
    // continuous-outcome context
    double kappa0 = 0.1, theta0 = 0.0;
    double half_nu_n = 0.0;   // (nu0 + n)/2
    double rest_base = 0.0;   // ss0 + A over cells outside the node
    double rest_shrink = 0.0;
    // binary-outcome context
    std::vector<double> beta_a, beta_b;
    // the node's observations
    struct Obs {
        double axis_value;
        double y;
        int arm;
    };
    std::vector<Obs> obs;

    // base: the tree with this node kept as a leaf; node_leaf: its leaf index
    static SplitScorer make(const TrialDataset& ds, const ConjugateConfig& conj,
                            const PartitionTree& base, int node_leaf, int axis) {
        SplitScorer s;
        s.kind = ds.outcome;
        s.arms = ds.arms;
        const CellStats stats = suff_stats(ds, base);
        if (ds.outcome == OutcomeKind::Binary) {
            s.beta_a = conj.beta_a;
            s.beta_b = conj.beta_b;
        } else {
            s.kappa0 = conj.kappa0;
            s.theta0 = conj.theta0;
            int n = 0;
            double a_rest = 0.0, shrink_rest = 0.0;
            for (int t = 0; t < stats.arms; ++t)
                for (int m = 0; m < stats.groups; ++m) {
                    const std::size_t c = static_cast<std::size_t>(stats.cell(t, m));
                    const int nc = stats.count[c];
                    n += nc;
                    if (nc == 0 || m == node_leaf) continue;
                    const double mean = stats.sum[c] / nc;
                    const double sse = std::max(0.0, stats.sumsq[c] - stats.sum[c] * mean);
                    a_rest += sse + conj.kappa0 * nc / (conj.kappa0 + nc) * (mean - conj.theta0) *
                                        (mean - conj.theta0);
                    shrink_rest += 0.5 * std::log(conj.kappa0 / (conj.kappa0 + nc));
                }
            s.half_nu_n = 0.5 * (conj.nu0 + n);
            s.rest_base = conj.ss0() + a_rest;
            s.rest_shrink = shrink_rest;
        }
        const int max_arm = std::min(s.arms, 8);
        for (const auto& rec : ds.records) {
            if (!rec.y || rec.arm > max_arm) continue;
            if (assign(ds.panel, base, rec.x) != node_leaf) continue;
            s.obs.push_back({rec.x[static_cast<std::size_t>(axis)], *rec.y, rec.arm - 1});
        }
        return s;
    }

    // score a left/right assignment of the node's observations
    template <typename LeftFn>
    double score(LeftFn&& left_of) const {
        double n[2][8] = {};
        double sum[2][8] = {};
        double sumsq[2][8] = {};
        double ones[2][8] = {};
        for (const auto& o : obs) {
            const int side = left_of(o) ? 0 : 1;
            n[side][o.arm] += 1;
            sum[side][o.arm] += o.y;
            sumsq[side][o.arm] += o.y * o.y;
            ones[side][o.arm] += o.y != 0.0 ? 1 : 0;
        }
        const int max_arm = std::min(arms, 8);
        if (kind == OutcomeKind::Binary) {
            double total = 0.0;
            for (int side = 0; side < 2; ++side)
                for (int t = 0; t < max_arm; ++t)
                    total += log_beta_fn(beta_a[static_cast<std::size_t>(t)] + ones[side][t],
                                         beta_b[static_cast<std::size_t>(t)] + n[side][t] -
                                             ones[side][t]);
            return total;
        }
        double a_node = 0.0, shrink_node = 0.0;
        for (int side = 0; side < 2; ++side)
            for (int t = 0; t < max_arm; ++t) {
                const double nc = n[side][t];
                if (nc == 0) continue;
                const double mean = sum[side][t] / nc;
                const double sse = std::max(0.0, sumsq[side][t] - sum[side][t] * mean);
                a_node += sse + kappa0 * nc / (kappa0 + nc) * (mean - theta0) * (mean - theta0);
                shrink_node += 0.5 * std::log(kappa0 / (kappa0 + nc));
            }
        return rest_shrink + shrink_node - half_nu_n * std::log(0.5 * (rest_base + a_node));
    }
};

// Candidate payload distribution for a node: marginal-weighted cells mixed
// with the prior's uniform law.
struct PayloadDistribution {
    const BiomarkerKind* axis_kind = nullptr;
    PayloadSpace space;
    // continuous: data-interval partition [edges[i], edges[i+1]) with
    // piecewise-constant marginal weights
    std::vector<double> edges;
    // discrete candidate payloads
    std::vector<int> cutoffs;
    std::vector<std::uint32_t> subsets;
    std::vector<double> prob;  // normalized informed weights per cell/candidate
    bool informed = false;

    double prior_density() const { return 1.0 / space.measure(); }

    double log_density(const SplitRule& rule) const {
        const double prior = prior_density();
        if (!informed) return std::log(prior);
        double q = 0.0;
        switch (axis_kind->type) {
            case BiomarkerType::Continuous: {
                const auto it = std::upper_bound(edges.begin(), edges.end(), rule.threshold);
                const std::size_t cell = static_cast<std::size_t>(it - edges.begin()) - 1;
                q = prob[cell] / (edges[cell + 1] - edges[cell]);
                break;
            }
            case BiomarkerType::Ordinal:
                q = prob[static_cast<std::size_t>(rule.cutoff - space.cut_lo)];
                break;
            case BiomarkerType::Categorical:
                for (std::size_t i = 0; i < subsets.size(); ++i)
                    if (subsets[i] == rule.subset) {
                        q = prob[i];
                        break;
                    }
                break;
            case BiomarkerType::Binary:
                return 0.0;
        }
        return std::log(kPayloadMixPrior * prior + (1.0 - kPayloadMixPrior) * q);
    }

    SplitRule sample(int axis, Rng& rng) const {
        SplitRule rule;
        rule.biomarker = axis;
        if (axis_kind->is_binary()) return rule;
        const bool from_prior = !informed || rng.uniform() < kPayloadMixPrior;
        switch (axis_kind->type) {
            case BiomarkerType::Continuous: {
                if (from_prior) {
                    rule.threshold = rng.uniform(space.lo, space.hi);
                } else {
                    const std::size_t cell = pick(rng);
                    rule.threshold = rng.uniform(edges[cell], edges[cell + 1]);
                }
                break;
            }
            case BiomarkerType::Ordinal:
                rule.cutoff = from_prior
                                  ? space.cut_lo + rng.uniform_int(space.cut_hi - space.cut_lo + 1)
                                  : space.cut_lo + static_cast<int>(pick(rng));
                break;
            case BiomarkerType::Categorical:
                rule.subset = from_prior ? sample_categorical_payload(space, rng)
                                         : subsets[pick(rng)];
                break;
            case BiomarkerType::Binary:
                break;
        }
        return rule;
    }

private:
    std::size_t pick(Rng& rng) const {
        double u = rng.uniform();
        for (std::size_t i = 0; i < prob.size(); ++i) {
            u -= prob[i];
            if (u < 0.0) return i;
        }
        return prob.size() - 1;
    }
};

inline void normalize_scores(std::vector<double>& logw) {
    double top = -std::numeric_limits<double>::infinity();
    for (double w : logw) top = std::max(top, w);
    double total = 0.0;
    for (double& w : logw) {
        w = std::exp(w - top);
        total += w;
    }
    for (double& w : logw) w /= total;
}

// Build the payload distribution for splitting `node_leaf` of `base` along
// `axis`; `space` must be the node's valid payload space.
inline PayloadDistribution payload_distribution(const TrialDataset& ds,
                                                const ConjugateConfig& conj,
                                                const PartitionTree& base, int node_leaf, int axis,
                                                const PayloadSpace& space) {
    PayloadDistribution dist;
    dist.axis_kind = &ds.panel.kinds[static_cast<std::size_t>(axis)];
    dist.space = space;
    if (dist.axis_kind->is_binary()) return dist;

    const SplitScorer scorer = SplitScorer::make(ds, conj, base, node_leaf, axis);
    std::vector<double> logw;
    switch (dist.axis_kind->type) {
        case BiomarkerType::Continuous: {
            // distinct observed values bound the data intervals; the marginal
            // is constant on each interval, so weighting a cell by its
            // marginal x width makes q(c) proportional to the conditional
            // posterior of the threshold
            std::vector<double> values;
            values.reserve(scorer.obs.size());
            for (const auto& o : scorer.obs) values.push_back(o.axis_value);
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            if (values.size() < 2) return dist;
            dist.edges = values;
            logw.resize(values.size() - 1);
            for (std::size_t i = 0; i + 1 < values.size(); ++i) {
                const double cut = values[i];
                logw[i] = scorer.score([&](const SplitScorer::Obs& o) {
                    return o.axis_value <= cut;
                }) + std::log(values[i + 1] - values[i]);
            }
            break;
        }
        case BiomarkerType::Ordinal: {
            for (int cut = space.cut_lo; cut <= space.cut_hi; ++cut) {
                dist.cutoffs.push_back(cut);
                logw.push_back(scorer.score(
                    [&](const SplitScorer::Obs& o) { return o.axis_value <= cut; }));
            }
            break;
        }
        case BiomarkerType::Categorical: {
            if (space.cat_options > kMaxScoredSubsets) return dist;  // uniform fallback
            const std::uint32_t lowest = space.cat_mask & (~space.cat_mask + 1u);
            const std::uint32_t others = space.cat_mask & ~lowest;
            const int r = std::popcount(others);
            for (std::uint32_t pick = 0; pick + 1 < (1u << r); ++pick) {
                std::uint32_t subset = lowest;
                int bit_index = 0;
                for (int b = 0; b < 32 && bit_index < r; ++b) {
                    if ((others >> b) & 1u) {
                        if ((pick >> bit_index) & 1u) subset |= (1u << b);
                        ++bit_index;
                    }
                }
                if (!categorical_payload_valid(subset, space)) continue;
                dist.subsets.push_back(subset);
                logw.push_back(scorer.score([&](const SplitScorer::Obs& o) {
                    return ((subset >> (static_cast<int>(o.axis_value) - 1)) & 1u) != 0;
                }));
            }
            break;
        }
        case BiomarkerType::Binary:
            return dist;
    }
    if (logw.empty()) return dist;
    normalize_scores(logw);
    dist.prob = std::move(logw);
    dist.informed = true;
    return dist;
}

struct NodePlan {
    bool split = false;
    SplitRule rule;
    double log_q = 0.0;  // selection plus payload density
};

// Draw (or evaluate) one node decision under the informed scheme. `given`
// carries the decision to evaluate; when absent a decision is sampled.
inline NodePlan plan_node(const TrialDataset& ds, const PartitionPriorParams& params,
                          const SplitSupport& support, const ConjugateConfig& conj,
                          const Region& region, const PartitionTree& base, int node_leaf,
                          const std::optional<SplitRule>* given, Rng* rng) {
    const NodeMenu menu = node_menu(ds.panel, params, support, region);
    if (menu.total_weight <= 0.0)
        throw RuntimeFailure("partition prior has no admissible decision at a node");
    NodePlan plan;
    int chosen_axis = -1;
    if (given) {
        if (!given->has_value()) {
            plan.log_q = std::log(menu.stop_weight / menu.total_weight);
            return plan;
        }
        chosen_axis = (*given)->biomarker;
    } else {
        double u = rng->uniform() * menu.total_weight;
        if (u < menu.stop_weight) {
            plan.log_q = std::log(menu.stop_weight / menu.total_weight);
            return plan;
        }
        u -= menu.stop_weight;
        chosen_axis = menu.axes.back();
        for (std::size_t i = 0; i < menu.axes.size(); ++i) {
            const double w = params.nu[static_cast<std::size_t>(menu.axes[i]) + 1];
            if (u < w) {
                chosen_axis = menu.axes[i];
                break;
            }
            u -= w;
        }
    }
    const PayloadSpace* space = nullptr;
    for (std::size_t i = 0; i < menu.axes.size(); ++i)
        if (menu.axes[i] == chosen_axis) space = &menu.spaces[i];
    if (space == nullptr) {
        plan.log_q = kNegInf;  // evaluating a tree the scheme cannot propose
        return plan;
    }
    const double select =
        std::log(params.nu[static_cast<std::size_t>(chosen_axis) + 1] / menu.total_weight);
    const PayloadDistribution dist =
        payload_distribution(ds, conj, base, node_leaf, chosen_axis, *space);
    plan.split = true;
    if (given) {
        plan.rule = **given;
        plan.log_q = select + dist.log_density(plan.rule);
    } else {
        plan.rule = dist.sample(chosen_axis, *rng);
        plan.log_q = select + dist.log_density(plan.rule);
    }
    return plan;
}

struct StructureProposal {
    PartitionTree tree;
    double log_q = 0.0;
};

// Sample a full tree (given == nullptr) or evaluate the scheme's density of
// an existing tree (given != nullptr).
inline StructureProposal structure_plan(const TrialDataset& ds, const PartitionPriorParams& params,
                                        const SplitSupport& support, const ConjugateConfig& conj,
                                        const PartitionTree* given, Rng* rng) {
    StructureProposal out;
    const Region whole = Region::whole(ds.panel);
    const PartitionTree empty;
    const std::optional<SplitRule> root_given =
        given ? (given->root ? std::optional<SplitRule>(given->root->rule) : std::nullopt)
              : std::optional<SplitRule>{};
    const NodePlan root =
        plan_node(ds, params, support, conj, whole, empty, 0, given ? &root_given : nullptr, rng);
    out.log_q = root.log_q;
    if (!root.split || out.log_q == kNegInf) return out;
    out.tree.root.emplace();
    out.tree.root->rule = root.rule;

    Region left, right;
    split_region(ds.panel, whole, root.rule, left, right);
    PartitionTree base = out.tree;  // root split, both children leaves

    const NodePlan left_plan = plan_node(ds, params, support, conj, left, base, 0,
                                         given ? &given->root->left : nullptr, rng);
    out.log_q += left_plan.log_q;
    if (out.log_q == kNegInf) return out;
    if (left_plan.split) {
        out.tree.root->left = left_plan.rule;
        base.root->left = left_plan.rule;
    }
    const int right_leaf = left_plan.split ? 2 : 1;
    const NodePlan right_plan = plan_node(ds, params, support, conj, right, base, right_leaf,
                                          given ? &given->root->right : nullptr, rng);
    out.log_q += right_plan.log_q;
    if (right_plan.split) out.tree.root->right = right_plan.rule;
    return out;
}

}  // namespace detail

// Threshold sweep: for each internal node with a payload, propose a new
// payload (structure fixed) and accept by the collapsed marginal x prior
// ratio. Proposals are symmetric: reflected random walk for continuous
// thresholds, uniform over the node's valid payload set otherwise.
inline void step_thresholds(ChainState& state, const TrialDataset& ds,
                            const PartitionPriorParams& params, const SplitSupport& support,
                            const ConjugateConfig& conj, const ChainConfig& cfg, Rng& rng,
                            PosteriorDraws* counters = nullptr) {
    if (!state.tree.root) return;
    const Region whole = Region::whole(ds.panel);

    auto try_node = [&](SplitRule& rule, const Region& node_region) {
        const auto proposal = detail::propose_payload(ds.panel, support, node_region, rule,
                                                      cfg.walk_sd_frac, rng);
        if (!proposal) return;  // binary split, nothing to update
        PartitionTree candidate = state.tree;
        // locate the same node in the copy by address offset
        SplitRule* slot = nullptr;
        if (&rule == &state.tree.root->rule) {
            slot = &candidate.root->rule;
        } else if (state.tree.root->left && &rule == &*state.tree.root->left) {
            slot = &*candidate.root->left;
        } else {
            slot = &*candidate.root->right;
        }
        *slot = *proposal;
        const double prior = prior_log_density(ds.panel, params, support, candidate);
        if (counters) ++counters->threshold_proposals;
        if (prior == kNegInf) return;
        const double marg = log_marginal(suff_stats(ds, candidate), conj);
        const double log_alpha = (marg + prior) - (state.log_marg + state.log_prior);
        if (log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha) {
            state.tree = candidate;
            state.log_marg = marg;
            state.log_prior = prior;
            if (counters) ++counters->threshold_accepts;
        }
    };

    // Root payload first; child regions always reflect the current root rule.
    try_node(state.tree.root->rule, whole);
    if (state.tree.root->left || state.tree.root->right) {
        Region left, right;
        detail::split_region(ds.panel, whole, state.tree.root->rule, left, right);
        if (state.tree.root->left) try_node(*state.tree.root->left, left);
        if (state.tree.root->right) try_node(*state.tree.root->right, right);
    }
}

// Structure move: joint independence proposal over (biomarkers, payloads)
// with the prior's selection menus and marginal-informed payload candidates.
// The proposal density is evaluated on both trees, keeping the ratio exact.
inline void step_structure(ChainState& state, const TrialDataset& ds,
                           const PartitionPriorParams& params, const SplitSupport& support,
                           const ConjugateConfig& conj, Rng& rng,
                           PosteriorDraws* counters = nullptr) {
    const detail::StructureProposal forward =
        detail::structure_plan(ds, params, support, conj, nullptr, &rng);
    if (counters) ++counters->structure_proposals;
    const double prior = prior_log_density(ds.panel, params, support, forward.tree);
    if (prior == kNegInf) return;
    const double marg = log_marginal(suff_stats(ds, forward.tree), conj);
    const detail::StructureProposal reverse =
        detail::structure_plan(ds, params, support, conj, &state.tree, nullptr);
    const double log_alpha = (marg + prior + reverse.log_q) -
                             (state.log_marg + state.log_prior + forward.log_q);
    if (log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha) {
        state.tree = forward.tree;
        state.log_marg = marg;
        state.log_prior = prior;
        if (counters) ++counters->structure_accepts;
    }
}

// Full posterior simulation: per iteration a threshold sweep, a structure
// move, then a Gibbs draw of the cell parameters. Deterministic given the
// seed. Optional trace: one line per retained sample.
inline PosteriorDraws run_chain(const TrialDataset& ds, const PartitionPriorParams& params,
                                const ConjugateConfig& conj, const ChainConfig& cfg,
                                std::ostream* trace = nullptr) {
    check_chain_config(cfg);
    check_panel(ds.panel);
    check_prior_params(params, ds.panel.size());
    check_conjugate(conj, ds.outcome, ds.arms);
    const ValidationReport report = validate_dataset(ds);
    if (!report.ok)
        throw ConfigError("dataset failed validation: " + report.violations.front().message);
    for (const auto& rec : ds.records)
        if (!rec.y) throw ConfigError("run_chain requires all outcomes observed");
    if (ds.records.empty()) throw ConfigError("run_chain requires a nonempty dataset");

    const SplitSupport support = SplitSupport::from_dataset(ds);
    Rng rng(cfg.seed);
    ChainState state;
    state.tree = PartitionTree{};  // start from the single-leaf partition
    state.log_marg = log_marginal(suff_stats(ds, state.tree), conj);
    state.log_prior = prior_log_density(ds.panel, params, support, state.tree);

    PosteriorDraws draws;
    const int retained = (cfg.iterations - cfg.burnin) / cfg.thinning;
    draws.samples.reserve(static_cast<std::size_t>(std::max(0, retained)));

    for (int it = 1; it <= cfg.iterations; ++it) {
        step_thresholds(state, ds, params, support, conj, cfg, rng, &draws);
        step_structure(state, ds, params, support, conj, rng, &draws);
        const CellParams cell = draw_cell_params(suff_stats(ds, state.tree), conj, rng);
        if (it > cfg.burnin && (it - cfg.burnin) % cfg.thinning == 0) {
            draws.samples.push_back({state.tree, cell});
            draws.log_post_trace.push_back(state.log_marg + state.log_prior);
            if (trace) {
                *trace << it << '\t' << state.tree.leaf_count() << '\t'
                       << (state.log_marg + state.log_prior) << '\t'
                       << format_tree(ds.panel, state.tree) << '\n';
            }
        }
    }
    return draws;
}

}  // namespace asied
