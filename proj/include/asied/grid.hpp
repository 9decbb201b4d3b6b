#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "asied/types.hpp"
#include "asied/util.hpp"

namespace asied {

// Cartesian report grid over the biomarker space. Continuous axes take D
// equally spaced values including both endpoints of the panel range; binary
// axes take {0,1}; ordinal/categorical axes take every level.
struct EffectGrid {
    BiomarkerPanel panel;
    std::vector<std::vector<double>> axis_values;
    std::vector<std::int64_t> stride;  // row-major, axis 0 outermost
    std::int64_t size = 0;

    int axes() const { return static_cast<int>(axis_values.size()); }

    std::int64_t axis_size(int k) const {
        return static_cast<std::int64_t>(axis_values[static_cast<std::size_t>(k)].size());
    }

    void decode(std::int64_t d, std::vector<int>& idx) const {
        idx.resize(axis_values.size());
        for (int k = axes() - 1; k >= 0; --k) {
            const std::int64_t dk = axis_size(k);
            idx[static_cast<std::size_t>(k)] = static_cast<int>(d % dk);
            d /= dk;
        }
    }

    std::vector<double> point(std::int64_t d) const {
        std::vector<int> idx;
        decode(d, idx);
        std::vector<double> x(axis_values.size());
        for (std::size_t k = 0; k < axis_values.size(); ++k)
            x[k] = axis_values[k][static_cast<std::size_t>(idx[k])];
        return x;
    }

    // Nearest-grid-point index of an arbitrary profile (ties toward the
    // smaller coordinate); defines region membership for off-grid x.
    std::int64_t nearest_index(const std::vector<double>& x) const {
        std::int64_t d = 0;
        for (int k = 0; k < axes(); ++k) {
            const auto& kind = panel.kinds[static_cast<std::size_t>(k)];
            const double v = x[static_cast<std::size_t>(k)];
            std::int64_t i = 0;
            if (kind.is_continuous()) {
                const auto& vals = axis_values[static_cast<std::size_t>(k)];
                const std::int64_t n = static_cast<std::int64_t>(vals.size());
                const double lo = vals.front();
                const double step = (vals.back() - lo) / static_cast<double>(n - 1);
                const double t = (v - lo) / step;
                const double u = t + 0.5;
                i = static_cast<std::int64_t>(std::floor(u));
                if (u == std::floor(u)) --i;  // midpoint tie: smaller coordinate
                if (i < 0) i = 0;
                if (i >= n) i = n - 1;
            } else if (kind.is_binary()) {
                i = v != 0.0 ? 1 : 0;
            } else {
                i = static_cast<std::int64_t>(v) - 1;
            }
            d = d * axis_size(k) + i;
        }
        return d;
    }
};

inline EffectGrid build_grid(const BiomarkerPanel& panel, std::span<const int> resolutions) {
    check_panel(panel);
    if (static_cast<int>(resolutions.size()) != panel.size())
        throw ConfigError("grid resolutions must match the panel size");
    EffectGrid grid;
    grid.panel = panel;
    grid.axis_values.resize(static_cast<std::size_t>(panel.size()));
    for (int k = 0; k < panel.size(); ++k) {
        const auto& kind = panel.kinds[static_cast<std::size_t>(k)];
        auto& vals = grid.axis_values[static_cast<std::size_t>(k)];
        switch (kind.type) {
            case BiomarkerType::Continuous: {
                const int d = resolutions[static_cast<std::size_t>(k)];
                if (d < 2) throw ConfigError("continuous grid resolution must be >= 2");
                vals.resize(static_cast<std::size_t>(d));
                for (int i = 0; i < d; ++i)
                    vals[static_cast<std::size_t>(i)] =
                        kind.range_lo + (kind.range_hi - kind.range_lo) * i / (d - 1);
                break;
            }
            case BiomarkerType::Binary:
                vals = {0.0, 1.0};
                break;
            case BiomarkerType::Ordinal:
            case BiomarkerType::Categorical:
                vals.resize(static_cast<std::size_t>(kind.levels));
                for (int v = 1; v <= kind.levels; ++v) vals[static_cast<std::size_t>(v - 1)] = v;
                break;
        }
    }
    grid.stride.assign(static_cast<std::size_t>(panel.size()), 1);
    grid.size = 1;
    for (int k = panel.size() - 1; k >= 0; --k) {
        grid.stride[static_cast<std::size_t>(k)] = grid.size;
        grid.size *= grid.axis_size(k);
        if (grid.size > (std::int64_t{1} << 27))
            throw ConfigError("grid too large; reduce per-axis resolution");
    }
    return grid;
}

inline EffectGrid build_grid(const BiomarkerPanel& panel, int continuous_resolution = 20) {
    std::vector<int> res(static_cast<std::size_t>(panel.size()), continuous_resolution);
    return build_grid(panel, res);
}

// Subset of grid points (a reported subgroup is a union of grid points).
struct GridRegion {
    std::vector<std::uint8_t> mask;
    std::int64_t count = 0;

    bool empty() const { return count == 0; }
    bool contains(std::int64_t d) const { return mask[static_cast<std::size_t>(d)] != 0; }

    static GridRegion none(const EffectGrid& grid) {
        GridRegion r;
        r.mask.assign(static_cast<std::size_t>(grid.size), 0);
        return r;
    }
    static GridRegion all(const EffectGrid& grid) {
        GridRegion r;
        r.mask.assign(static_cast<std::size_t>(grid.size), 1);
        r.count = grid.size;
        return r;
    }

    void add(std::int64_t d) {
        if (!mask[static_cast<std::size_t>(d)]) {
            mask[static_cast<std::size_t>(d)] = 1;
            ++count;
        }
    }
};

// Enrollment-eligibility test for arbitrary profiles.
inline bool region_contains_profile(const EffectGrid& grid, const GridRegion& region,
                                    const std::vector<double>& x) {
    return region.contains(grid.nearest_index(x));
}

}  // namespace asied
