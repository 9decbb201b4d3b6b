#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "asied/rng.hpp"
#include "asied/types.hpp"
#include "asied/util.hpp"

namespace asied {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// One axis-aligned split. Payload interpretation depends on the biomarker's
// kind: continuous -> threshold (left: x <= c); ordinal -> cutoff level
// (left: x <= c, c in 1..V-1); categorical -> left-membership bitmask over
// levels (bit v-1 <=> level v goes left); binary -> none (left: x = 0).
struct SplitRule {
    int biomarker = 0;  // 0-based axis index
    double threshold = 0.0;
    int cutoff = 0;
    std::uint32_t subset = 0;
};

// Random partition of the biomarker space: at most two rounds of splits, so
// at most four leaves. Children of a round-2 split are always leaves.
struct PartitionTree {
    struct Root {
        SplitRule rule;
        std::optional<SplitRule> left;   // round-2 split of the left child
        std::optional<SplitRule> right;  // round-2 split of the right child
    };
    std::optional<Root> root;

    int leaf_count() const {
        if (!root) return 1;
        return (root->left ? 2 : 1) + (root->right ? 2 : 1);
    }
};

// Selection probabilities nu_0..nu_K; nu_0 is the no-split weight.
struct PartitionPriorParams {
    std::vector<double> nu;

    static PartitionPriorParams uniform(int biomarkers) {
        PartitionPriorParams p;
        p.nu.assign(static_cast<std::size_t>(biomarkers) + 1,
                    1.0 / (biomarkers + 1));
        return p;
    }
};

inline void check_prior_params(const PartitionPriorParams& params, int biomarkers) {
    if (static_cast<int>(params.nu.size()) != biomarkers + 1)
        throw ConfigError("partition prior needs K+1 selection probabilities");
    double total = 0;
    for (double v : params.nu) {
        if (!(v >= 0.0)) throw ConfigError("selection probabilities must be >= 0");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("selection probabilities must sum to 1");
}

// Observed profiles backing the split prior: the data-dependent continuous
// threshold ranges and, through per-node scans, the payload menus. A payload
// is admissible only when both children keep at least one enrolled patient
// (a split must never create an empty subgroup), so menus are recomputed
// from the accumulated data at each analysis.
struct SplitSupport {
    std::vector<std::vector<double>> profiles;  // observed biomarker vectors

    static SplitSupport from_dataset(const TrialDataset& ds) {
        if (ds.records.empty())
            throw RuntimeFailure("the split prior needs a nonempty dataset");
        SplitSupport s;
        s.profiles.reserve(ds.records.size());
        for (const auto& rec : ds.records) s.profiles.push_back(rec.x);
        return s;
    }

    static SplitSupport from_profiles(std::vector<std::vector<double>> profiles) {
        SplitSupport s;
        s.profiles = std::move(profiles);
        return s;
    }
};

// Axis-aligned subset of the biomarker space. Continuous axes are half-open
// intervals (lo, hi]; discrete axes are level bitmasks.
struct Region {
    struct Axis {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        std::uint32_t mask = 0;
    };
    std::vector<Axis> axes;

    static Region whole(const BiomarkerPanel& panel) {
        Region r;
        r.axes.resize(static_cast<std::size_t>(panel.size()));
        for (int k = 0; k < panel.size(); ++k) {
            const auto& kind = panel.kinds[static_cast<std::size_t>(k)];
            auto& ax = r.axes[static_cast<std::size_t>(k)];
            if (kind.is_continuous()) continue;
            const int v = kind.is_binary() ? 2 : kind.levels;
            ax.mask = (v >= 32) ? ~0u : ((1u << v) - 1u);
        }
        return r;
    }

    bool contains(const BiomarkerPanel& panel, const std::vector<double>& x) const {
        for (int k = 0; k < panel.size(); ++k) {
            const auto& kind = panel.kinds[static_cast<std::size_t>(k)];
            const auto& ax = axes[static_cast<std::size_t>(k)];
            const double v = x[static_cast<std::size_t>(k)];
            if (kind.is_continuous()) {
                if (!(v > ax.lo && v <= ax.hi)) return false;
            } else {
                const int bit = kind.is_binary() ? static_cast<int>(v)
                                                 : static_cast<int>(v) - 1;
                if (((ax.mask >> bit) & 1u) == 0) return false;
            }
        }
        return true;
    }
};

namespace detail {

inline bool goes_left(const BiomarkerKind& kind, const SplitRule& rule, double v) {
    switch (kind.type) {
        case BiomarkerType::Continuous: return v <= rule.threshold;
        case BiomarkerType::Binary: return v == 0.0;
        case BiomarkerType::Ordinal: return v <= rule.cutoff;
        case BiomarkerType::Categorical:
            return ((rule.subset >> (static_cast<int>(v) - 1)) & 1u) != 0;
    }
    return false;
}

inline void split_region(const BiomarkerPanel& panel, const Region& parent,
                         const SplitRule& rule, Region& left, Region& right) {
    left = parent;
    right = parent;
    const auto& kind = panel.kinds[static_cast<std::size_t>(rule.biomarker)];
    auto& la = left.axes[static_cast<std::size_t>(rule.biomarker)];
    auto& ra = right.axes[static_cast<std::size_t>(rule.biomarker)];
    switch (kind.type) {
        case BiomarkerType::Continuous:
            la.hi = std::min(la.hi, rule.threshold);
            ra.lo = std::max(ra.lo, rule.threshold);
            break;
        case BiomarkerType::Binary:
            la.mask &= 1u;        // value 0
            ra.mask &= 2u;        // value 1
            break;
        case BiomarkerType::Ordinal: {
            const std::uint32_t le = (rule.cutoff >= 32) ? ~0u : ((1u << rule.cutoff) - 1u);
            la.mask &= le;
            ra.mask &= ~le;
            break;
        }
        case BiomarkerType::Categorical:
            la.mask &= rule.subset;
            ra.mask &= ~rule.subset;
            break;
    }
}

// The valid payload space for splitting axis k inside `region`. A payload is
// valid iff both children contain at least one observed patient; the
// selection menu at a node only offers axes with a nonempty payload space.
struct PayloadSpace {
    bool available = false;
    bool no_payload = false;  // binary: the split is deterministic, p(c) = 1
    // continuous: thresholds in [lo, hi) keep data on both sides
    double lo = 0.0, hi = 0.0;
    // ordinal: admissible cutoffs [cut_lo, cut_hi]
    int cut_lo = 0, cut_hi = -1;
    // categorical: region/observed category masks and valid canonical count
    std::uint32_t cat_mask = 0;
    std::uint32_t cat_present = 0;
    int cat_options = 0;

    double log_density() const { return -std::log(measure()); }
    double measure() const {
        if (no_payload) return 1.0;
        if (cut_hi >= cut_lo) return cut_hi - cut_lo + 1;
        if (cat_options > 0) return cat_options;
        return hi - lo;
    }
};

// Number of canonical proper subsets S of `mask` (S contains the lowest
// region category) with observed categories on both sides of the split.
inline int categorical_valid_count(std::uint32_t mask, std::uint32_t present) {
    const int c = std::popcount(mask);
    if (c < 2 || present == 0) return 0;
    const std::uint32_t lowest = mask & (~mask + 1u);
    const int base = (1 << (c - 1)) - 1;
    int invalid_disjoint = 0;  // S avoids every observed category
    if ((present & lowest) == 0) {
        const int unobserved = c - std::popcount(present);
        invalid_disjoint = 1 << (unobserved - 1);
    }
    const int pinned = std::popcount(present | lowest);
    const int invalid_superset = (1 << (c - pinned)) - 1;  // S swallows all observed
    return base - invalid_disjoint - invalid_superset;
}

// Per-axis observed data inside a region: continuous min/max and discrete
// level masks, gathered in one scan.
struct NodeData {
    std::vector<double> lo, hi;
    std::vector<std::uint32_t> present;
    int count = 0;
};

inline NodeData node_data(const BiomarkerPanel& panel, const SplitSupport& support,
                          const Region& region) {
    const int K = panel.size();
    NodeData data;
    data.lo.assign(static_cast<std::size_t>(K), std::numeric_limits<double>::infinity());
    data.hi.assign(static_cast<std::size_t>(K), -std::numeric_limits<double>::infinity());
    data.present.assign(static_cast<std::size_t>(K), 0);
    for (const auto& x : support.profiles) {
        if (!region.contains(panel, x)) continue;
        ++data.count;
        for (int k = 0; k < K; ++k) {
            const auto& kind = panel.kinds[static_cast<std::size_t>(k)];
            const double v = x[static_cast<std::size_t>(k)];
            if (kind.is_continuous()) {
                data.lo[static_cast<std::size_t>(k)] = std::min(data.lo[static_cast<std::size_t>(k)], v);
                data.hi[static_cast<std::size_t>(k)] = std::max(data.hi[static_cast<std::size_t>(k)], v);
            } else {
                const int bit = kind.is_binary() ? static_cast<int>(v) : static_cast<int>(v) - 1;
                data.present[static_cast<std::size_t>(k)] |= (1u << bit);
            }
        }
    }
    return data;
}

inline PayloadSpace payload_space(const BiomarkerKind& kind, const Region::Axis& ax,
                                  double data_lo, double data_hi, std::uint32_t data_present) {
    PayloadSpace ps;
    switch (kind.type) {
        case BiomarkerType::Continuous: {
            ps.lo = data_lo;
            ps.hi = data_hi;
            ps.available = ps.lo < ps.hi;
            break;
        }
        case BiomarkerType::Binary:
            ps.available = (ax.mask & data_present) == 3u;
            ps.no_payload = true;
            break;
        case BiomarkerType::Ordinal: {
            const std::uint32_t obs = ax.mask & data_present;
            if (obs != 0 && (obs & (obs - 1)) != 0) {
                ps.cut_lo = std::countr_zero(obs) + 1;       // lowest observed level
                ps.cut_hi = 32 - std::countl_zero(obs) - 1;  // highest observed level - 1
                ps.available = true;
            }
            break;
        }
        case BiomarkerType::Categorical: {
            const std::uint32_t obs = ax.mask & data_present;
            ps.cat_mask = ax.mask;
            ps.cat_present = obs;
            ps.cat_options = categorical_valid_count(ax.mask, obs);
            ps.available = ps.cat_options > 0;
            break;
        }
    }
    return ps;
}

// Canonical categorical payloads contain the region's lowest category, so
// each two-way split is counted once; validity additionally requires
// observed patients on both sides.
inline bool categorical_payload_valid(std::uint32_t subset, const PayloadSpace& ps) {
    if ((subset & ~ps.cat_mask) != 0) return false;
    if (subset == 0 || subset == ps.cat_mask) return false;
    const std::uint32_t lowest = ps.cat_mask & (~ps.cat_mask + 1u);
    if ((subset & lowest) == 0) return false;
    return (subset & ps.cat_present) != 0 && (ps.cat_present & ~subset) != 0;
}

inline std::uint32_t sample_categorical_payload(const PayloadSpace& ps, Rng& rng) {
    const std::uint32_t lowest = ps.cat_mask & (~ps.cat_mask + 1u);
    const std::uint32_t others = ps.cat_mask & ~lowest;
    const int r = std::popcount(others);
    // walk the canonical subsets in counter order to the drawn valid index
    int target = rng.uniform_int(ps.cat_options);
    for (std::uint32_t pick = 0; pick + 1 < (1u << r); ++pick) {
        std::uint32_t subset = lowest;
        int bit_index = 0;
        for (int b = 0; b < 32 && bit_index < r; ++b) {
            if ((others >> b) & 1u) {
                if ((pick >> bit_index) & 1u) subset |= (1u << b);
                ++bit_index;
            }
        }
        if (categorical_payload_valid(subset, ps) && target-- == 0) return subset;
    }
    throw RuntimeFailure("categorical payload sampling exhausted its menu");
}

inline bool payload_valid(const BiomarkerKind& kind, const SplitRule& rule,
                          const PayloadSpace& ps) {
    switch (kind.type) {
        case BiomarkerType::Continuous:
            return rule.threshold >= ps.lo && rule.threshold < ps.hi;
        case BiomarkerType::Binary:
            return true;
        case BiomarkerType::Ordinal:
            return rule.cutoff >= ps.cut_lo && rule.cutoff <= ps.cut_hi;
        case BiomarkerType::Categorical:
            return categorical_payload_valid(rule.subset, ps);
    }
    return false;
}

struct NodeMenu {
    std::vector<int> axes;            // available biomarkers
    std::vector<PayloadSpace> spaces; // parallel to axes
    double total_weight = 0.0;        // nu_0 + sum of available nu_k
    double stop_weight = 0.0;
};

inline NodeMenu node_menu(const BiomarkerPanel& panel, const PartitionPriorParams& params,
                          const SplitSupport& support, const Region& region) {
    NodeMenu menu;
    menu.stop_weight = params.nu[0];
    menu.total_weight = params.nu[0];
    const NodeData data = node_data(panel, support, region);
    for (int k = 0; k < panel.size(); ++k) {
        const auto& kind = panel.kinds[static_cast<std::size_t>(k)];
        const PayloadSpace ps = payload_space(kind, region.axes[static_cast<std::size_t>(k)],
                                              data.lo[static_cast<std::size_t>(k)],
                                              data.hi[static_cast<std::size_t>(k)],
                                              data.present[static_cast<std::size_t>(k)]);
        if (!ps.available) continue;
        menu.axes.push_back(k);
        menu.spaces.push_back(ps);
        menu.total_weight += params.nu[static_cast<std::size_t>(k) + 1];
    }
    return menu;
}

// Draws stop (returns nullopt) or a split rule, per the renormalized menu.
inline std::optional<SplitRule> sample_decision(const BiomarkerPanel& panel,
                                                const PartitionPriorParams& params,
                                                const NodeMenu& menu, Rng& rng) {
    if (menu.total_weight <= 0.0)
        throw RuntimeFailure("partition prior has no admissible decision at a node");
    double u = rng.uniform() * menu.total_weight;
    if (u < menu.stop_weight) return std::nullopt;
    u -= menu.stop_weight;
    std::size_t pick = menu.axes.size() - 1;  // guard against roundoff
    for (std::size_t i = 0; i < menu.axes.size(); ++i) {
        const double w = params.nu[static_cast<std::size_t>(menu.axes[i]) + 1];
        if (u < w) {
            pick = i;
            break;
        }
        u -= w;
    }
    const int k = menu.axes[pick];
    const PayloadSpace& ps = menu.spaces[pick];
    SplitRule rule;
    rule.biomarker = k;
    switch (panel.kinds[static_cast<std::size_t>(k)].type) {
        case BiomarkerType::Continuous:
            rule.threshold = rng.uniform(ps.lo, ps.hi);
            break;
        case BiomarkerType::Binary:
            break;
        case BiomarkerType::Ordinal:
            rule.cutoff = ps.cut_lo + rng.uniform_int(ps.cut_hi - ps.cut_lo + 1);
            break;
        case BiomarkerType::Categorical:
            rule.subset = sample_categorical_payload(ps, rng);
            break;
    }
    return rule;
}

// log density of one node decision under the renormalized menu; -inf when the
// rule is not on the menu or its payload is invalid in the node's region.
inline double decision_log_density(const BiomarkerPanel& panel,
                                   const PartitionPriorParams& params, const NodeMenu& menu,
                                   const std::optional<SplitRule>& decision) {
    if (menu.total_weight <= 0.0) return kNegInf;
    if (!decision) {
        if (menu.stop_weight <= 0.0) return kNegInf;
        return std::log(menu.stop_weight / menu.total_weight);
    }
    for (std::size_t i = 0; i < menu.axes.size(); ++i) {
        if (menu.axes[i] != decision->biomarker) continue;
        const double w = params.nu[static_cast<std::size_t>(menu.axes[i]) + 1];
        if (w <= 0.0) return kNegInf;
        const auto& kind = panel.kinds[static_cast<std::size_t>(decision->biomarker)];
        if (!payload_valid(kind, *decision, menu.spaces[i])) return kNegInf;
        return std::log(w / menu.total_weight) + menu.spaces[i].log_density();
    }
    return kNegInf;
}

}  // namespace detail

// Draw a partition from the prior: one root decision, then one decision per
// round-1 child. The payload menus condition on validity, so the sampling
// density equals prior_log_density exactly.
inline PartitionTree sample_prior(const BiomarkerPanel& panel,
                                  const PartitionPriorParams& params,
                                  const SplitSupport& support, Rng& rng) {
    PartitionTree tree;
    const Region whole = Region::whole(panel);
    const auto root_rule =
        detail::sample_decision(panel, params, detail::node_menu(panel, params, support, whole), rng);
    if (!root_rule) return tree;
    tree.root.emplace();
    tree.root->rule = *root_rule;
    Region left, right;
    detail::split_region(panel, whole, *root_rule, left, right);
    tree.root->left =
        detail::sample_decision(panel, params, detail::node_menu(panel, params, support, left), rng);
    tree.root->right =
        detail::sample_decision(panel, params, detail::node_menu(panel, params, support, right), rng);
    return tree;
}

inline PartitionTree sample_prior(const BiomarkerPanel& panel,
                                  const PartitionPriorParams& params,
                                  const TrialDataset& dataset, Rng& rng) {
    return sample_prior(panel, params, SplitSupport::from_dataset(dataset), rng);
}

// log p(tree): selection terms at the root and round-1 children plus payload
// densities. Trees with invalid rules (empty child region, off-menu axis)
// evaluate to -inf. Leaves forced by the two-round depth bound contribute
// nothing.
inline double prior_log_density(const BiomarkerPanel& panel,
                                const PartitionPriorParams& params,
                                const SplitSupport& support, const PartitionTree& tree) {
    const Region whole = Region::whole(panel);
    const auto root_menu = detail::node_menu(panel, params, support, whole);
    if (!tree.root)
        return detail::decision_log_density(panel, params, root_menu, std::nullopt);
    double total = detail::decision_log_density(
        panel, params, root_menu, std::optional<SplitRule>(tree.root->rule));
    if (total == kNegInf) return kNegInf;
    Region left, right;
    detail::split_region(panel, whole, tree.root->rule, left, right);
    total += detail::decision_log_density(
        panel, params, detail::node_menu(panel, params, support, left), tree.root->left);
    total += detail::decision_log_density(
        panel, params, detail::node_menu(panel, params, support, right), tree.root->right);
    return total;
}

inline double prior_log_density(const BiomarkerPanel& panel,
                                const PartitionPriorParams& params,
                                const TrialDataset& dataset, const PartitionTree& tree) {
    return prior_log_density(panel, params, SplitSupport::from_dataset(dataset), tree);
}

// Route a biomarker profile to its 0-based leaf index (left-to-right order).
inline int assign(const BiomarkerPanel& panel, const PartitionTree& tree,
                  const std::vector<double>& x) {
    if (!tree.root) return 0;
    const auto& root = *tree.root;
    const bool left = detail::goes_left(
        panel.kinds[static_cast<std::size_t>(root.rule.biomarker)], root.rule,
        x[static_cast<std::size_t>(root.rule.biomarker)]);
    if (left) {
        if (!root.left) return 0;
        return detail::goes_left(panel.kinds[static_cast<std::size_t>(root.left->biomarker)],
                                 *root.left, x[static_cast<std::size_t>(root.left->biomarker)])
                   ? 0
                   : 1;
    }
    const int base = root.left ? 2 : 1;
    if (!root.right) return base;
    return detail::goes_left(panel.kinds[static_cast<std::size_t>(root.right->biomarker)],
                             *root.right, x[static_cast<std::size_t>(root.right->biomarker)])
               ? base
               : base + 1;
}

// Leaf regions in leaf order; for every x exactly one region contains it.
inline std::vector<Region> leaf_regions(const BiomarkerPanel& panel, const PartitionTree& tree) {
    const Region whole = Region::whole(panel);
    if (!tree.root) return {whole};
    Region left, right;
    detail::split_region(panel, whole, tree.root->rule, left, right);
    std::vector<Region> leaves;
    auto expand = [&](const Region& r, const std::optional<SplitRule>& rule) {
        if (!rule) {
            leaves.push_back(r);
            return;
        }
        Region a, b;
        detail::split_region(panel, r, *rule, a, b);
        leaves.push_back(a);
        leaves.push_back(b);
    };
    expand(left, tree.root->left);
    expand(right, tree.root->right);
    return leaves;
}

namespace detail {

inline std::string payload_string(const BiomarkerKind& kind, const SplitRule& rule) {
    std::ostringstream os;
    switch (kind.type) {
        case BiomarkerType::Continuous:
            os << rule.threshold;
            break;
        case BiomarkerType::Binary:
            os << "0|1";
            break;
        case BiomarkerType::Ordinal:
            os << "<=" << rule.cutoff;
            break;
        case BiomarkerType::Categorical: {
            os << "{";
            bool first = true;
            for (int v = 1; v <= kind.levels; ++v) {
                if ((rule.subset >> (v - 1)) & 1u) {
                    if (!first) os << ",";
                    os << v;
                    first = false;
                }
            }
            os << "}";
            break;
        }
    }
    return os.str();
}

}  // namespace detail

// Human-readable nested form: split(k, payload)[left, right] / leaf(m), with
// 1-based biomarker and leaf numbering.
inline std::string format_tree(const BiomarkerPanel& panel, const PartitionTree& tree) {
    int next_leaf = 1;
    auto leaf = [&] { return "leaf(" + std::to_string(next_leaf++) + ")"; };
    auto split_str = [&](const SplitRule& rule, const std::string& l, const std::string& r) {
        const auto& kind = panel.kinds[static_cast<std::size_t>(rule.biomarker)];
        return "split(" + std::to_string(rule.biomarker + 1) + ", " +
               detail::payload_string(kind, rule) + ")[" + l + ", " + r + "]";
    };
    if (!tree.root) return leaf();
    auto child = [&](const std::optional<SplitRule>& rule) {
        if (!rule) return leaf();
        const std::string l = leaf();
        const std::string r = leaf();
        return split_str(*rule, l, r);
    };
    const std::string l = child(tree.root->left);
    const std::string r = child(tree.root->right);
    return split_str(tree.root->rule, l, r);
}

// Payload-free shape key used for posterior structure-frequency summaries.
inline std::string structure_signature(const PartitionTree& tree) {
    if (!tree.root) return "leaf";
    auto child = [&](const std::optional<SplitRule>& rule) -> std::string {
        if (!rule) return "leaf";
        return "split(" + std::to_string(rule->biomarker + 1) + ")[leaf, leaf]";
    };
    return "split(" + std::to_string(tree.root->rule.biomarker + 1) + ")[" +
           child(tree.root->left) + ", " + child(tree.root->right) + "]";
}

}  // namespace asied
