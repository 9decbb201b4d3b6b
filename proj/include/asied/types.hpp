#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "asied/util.hpp"

namespace asied {

enum class BiomarkerType { Continuous, Binary, Ordinal, Categorical };

// Descriptor for one biomarker axis. Continuous biomarkers carry an observed
// range because both the threshold prior and the report grid are
// data-dependent; ordinal/categorical levels are encoded 1..V.
struct BiomarkerKind {
    BiomarkerType type = BiomarkerType::Continuous;
    int levels = 0;          // V, ordinal/categorical only
    double range_lo = -1.0;  // continuous only
    double range_hi = 1.0;

    static BiomarkerKind continuous(double lo, double hi) {
        return BiomarkerKind{BiomarkerType::Continuous, 0, lo, hi};
    }
    static BiomarkerKind binary() { return BiomarkerKind{BiomarkerType::Binary, 2, 0, 0}; }
    static BiomarkerKind ordinal(int v) { return BiomarkerKind{BiomarkerType::Ordinal, v, 0, 0}; }
    static BiomarkerKind categorical(int v) {
        return BiomarkerKind{BiomarkerType::Categorical, v, 0, 0};
    }

    bool is_continuous() const { return type == BiomarkerType::Continuous; }
    bool is_binary() const { return type == BiomarkerType::Binary; }
};

struct BiomarkerPanel {
    std::vector<std::string> names;
    std::vector<BiomarkerKind> kinds;

    int size() const { return static_cast<int>(kinds.size()); }
};

// Throws ConfigError on malformed panels (type invariants, not data).
inline void check_panel(const BiomarkerPanel& panel) {
    if (panel.kinds.empty()) throw ConfigError("panel must contain at least one biomarker");
    if (panel.names.size() != panel.kinds.size())
        throw ConfigError("panel names/kinds length mismatch");
    std::set<std::string> seen;
    for (std::size_t k = 0; k < panel.kinds.size(); ++k) {
        const auto& kind = panel.kinds[k];
        const std::string& name = panel.names[k];
        if (!seen.insert(name).second) throw ConfigError("duplicate biomarker name: " + name);
        switch (kind.type) {
            case BiomarkerType::Continuous:
                if (!(kind.range_lo < kind.range_hi) || !std::isfinite(kind.range_lo) ||
                    !std::isfinite(kind.range_hi))
                    throw ConfigError("continuous biomarker " + name + " needs range lo < hi");
                break;
            case BiomarkerType::Ordinal:
            case BiomarkerType::Categorical:
                if (kind.levels < 2)
                    throw ConfigError("biomarker " + name + " needs at least 2 levels");
                if (kind.levels > 30)
                    throw ConfigError("biomarker " + name + " exceeds the 30-level limit");
                break;
            case BiomarkerType::Binary:
                break;
        }
    }
}

struct PatientRecord {
    int id = 0;
    std::vector<double> x;       // length K, encoded per BiomarkerKind
    int arm = 1;                 // 1..T; arm 1 = control, arm 2 = investigational
    std::optional<double> y;     // absent until observed
};

enum class OutcomeKind { Binary, Continuous };

struct TrialDataset {
    BiomarkerPanel panel;
    int arms = 2;
    OutcomeKind outcome = OutcomeKind::Continuous;
    std::vector<PatientRecord> records;

    int size() const { return static_cast<int>(records.size()); }
};

struct Violation {
    int record_id = -1;
    std::string message;
};

struct ValidationReport {
    bool ok = true;
    std::vector<Violation> violations;
    std::vector<std::string> warnings;
};

namespace detail {
inline bool is_integer_valued(double v) { return std::isfinite(v) && v == std::floor(v); }
}  // namespace detail

// Per-record validation against the panel and outcome kind. Violations are
// data, not failures; a malformed panel itself throws.
inline ValidationReport validate_dataset(const TrialDataset& ds) {
    check_panel(ds.panel);
    if (ds.arms < 2) throw ConfigError("dataset must declare at least 2 arms");
    ValidationReport report;
    if (ds.records.empty()) report.warnings.push_back("no records");
    const int K = ds.panel.size();
    for (const auto& rec : ds.records) {
        auto flag = [&](const std::string& msg) {
            report.ok = false;
            report.violations.push_back({rec.id, msg});
        };
        if (static_cast<int>(rec.x.size()) != K) {
            flag("biomarker vector has wrong length");
            continue;
        }
        for (int k = 0; k < K; ++k) {
            const double v = rec.x[static_cast<std::size_t>(k)];
            const auto& kind = ds.panel.kinds[static_cast<std::size_t>(k)];
            const std::string& name = ds.panel.names[static_cast<std::size_t>(k)];
            switch (kind.type) {
                case BiomarkerType::Continuous:
                    if (!std::isfinite(v)) flag("non-finite value for biomarker " + name);
                    break;
                case BiomarkerType::Binary:
                    if (v != 0.0 && v != 1.0) flag("binary biomarker " + name + " outside {0,1}");
                    break;
                case BiomarkerType::Ordinal:
                case BiomarkerType::Categorical:
                    if (!detail::is_integer_valued(v) || v < 1.0 || v > kind.levels)
                        flag("level out of range for biomarker " + name);
                    break;
            }
        }
        if (rec.arm < 1 || rec.arm > ds.arms) flag("arm index out of range");
        if (rec.y) {
            if (!std::isfinite(*rec.y)) {
                flag("non-finite outcome");
            } else if (ds.outcome == OutcomeKind::Binary && *rec.y != 0.0 && *rec.y != 1.0) {
                flag("binary outcome outside {0,1}");
            }
        }
    }
    return report;
}

}  // namespace asied
