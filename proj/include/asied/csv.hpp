#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "asied/types.hpp"
#include "asied/util.hpp"

namespace asied {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

}  // namespace detail

// Dataset read from a self-describing CSV: each header cell is
// "name:continuous", "name:binary", "name:ordinal:V", "name:categorical:V",
// "arm", or "outcome" (optionally "outcome:binary" / "outcome:continuous";
// bare "outcome" is inferred binary iff every observed value is 0/1).
// Categorical cells may carry string labels; they are mapped to 1..V in
// order of first appearance. Continuous observed ranges are filled in from
// the data. Schema problems throw ConfigError.
struct CsvDataset {
    TrialDataset dataset;
    std::vector<std::map<std::string, int>> label_maps;  // per biomarker
};

inline CsvDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("dataset file is empty: " + path);

    enum class Col { Biomarker, Arm, Outcome };
    struct Column {
        Col role;
        int biomarker = -1;
    };
    BiomarkerPanel panel;
    std::vector<Column> columns;
    int arm_col = -1, outcome_col = -1;
    bool outcome_declared = false;
    OutcomeKind declared_kind = OutcomeKind::Continuous;

    const auto header = detail::split_csv_line(line);
    for (const auto& cell : header) {
        std::vector<std::string> parts;
        std::stringstream ss(cell);
        std::string piece;
        while (std::getline(ss, piece, ':')) parts.push_back(detail::trim(piece));
        if (parts.empty()) throw ConfigError("empty header cell in " + path);
        const std::string tail = parts.back();
        auto lower = [](std::string s) {
            std::transform(s.begin(), s.end(), s.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            return s;
        };
        const std::string kind0 = lower(parts.size() >= 2 ? parts[1] : parts[0]);
        if (kind0 == "arm" || lower(parts[0]) == "arm") {
            if (arm_col >= 0) throw ConfigError("duplicate arm column");
            arm_col = static_cast<int>(columns.size());
            columns.push_back({Col::Arm});
            continue;
        }
        if (kind0 == "outcome" || lower(parts[0]) == "outcome") {
            if (outcome_col >= 0) throw ConfigError("duplicate outcome column");
            outcome_col = static_cast<int>(columns.size());
            columns.push_back({Col::Outcome});
            const std::string sub = lower(tail);
            if (sub == "binary") {
                outcome_declared = true;
                declared_kind = OutcomeKind::Binary;
            } else if (sub == "continuous") {
                outcome_declared = true;
                declared_kind = OutcomeKind::Continuous;
            }
            continue;
        }
        if (parts.size() < 2) throw ConfigError("header cell missing a type: " + cell);
        const std::string name = parts[0];
        const std::string kind = lower(parts[1]);
        BiomarkerKind bk;
        if (kind == "continuous") {
            bk = BiomarkerKind::continuous(-1.0, 1.0);  // range overwritten from data
        } else if (kind == "binary") {
            bk = BiomarkerKind::binary();
        } else if (kind == "ordinal" || kind == "categorical") {
            if (parts.size() != 3) throw ConfigError("missing level count in header cell: " + cell);
            int v = 0;
            try {
                v = std::stoi(parts[2]);
            } catch (...) {
                throw ConfigError("bad level count in header cell: " + cell);
            }
            bk = kind == "ordinal" ? BiomarkerKind::ordinal(v) : BiomarkerKind::categorical(v);
        } else {
            throw ConfigError("unknown column type in header cell: " + cell);
        }
        columns.push_back({Col::Biomarker, panel.size()});
        panel.names.push_back(name);
        panel.kinds.push_back(bk);
    }
    if (arm_col < 0) throw ConfigError("dataset needs an arm column");
    if (outcome_col < 0) throw ConfigError("dataset needs an outcome column");
    if (panel.size() < 1) throw ConfigError("dataset needs at least one biomarker column");
    check_panel(panel);

    CsvDataset out;
    out.dataset.panel = panel;
    out.label_maps.resize(static_cast<std::size_t>(panel.size()));
    int max_arm = 0;
    bool all_01 = true;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != columns.size())
            throw ConfigError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(columns.size()) + " cells, got " +
                              std::to_string(cells.size()));
        PatientRecord rec;
        rec.id = static_cast<int>(out.dataset.records.size());
        rec.x.assign(static_cast<std::size_t>(panel.size()), 0.0);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto& col = columns[c];
            const std::string& cell = cells[c];
            if (col.role == Col::Arm) {
                double v;
                if (!detail::parse_double(cell, v) || v != std::floor(v) || v < 1)
                    throw ConfigError("line " + std::to_string(line_no) + ": bad arm value");
                rec.arm = static_cast<int>(v);
                max_arm = std::max(max_arm, rec.arm);
            } else if (col.role == Col::Outcome) {
                if (cell.empty()) continue;  // outcome not yet observed
                double v;
                if (!detail::parse_double(cell, v))
                    throw ConfigError("line " + std::to_string(line_no) + ": bad outcome value");
                rec.y = v;
                if (v != 0.0 && v != 1.0) all_01 = false;
            } else {
                const int k = col.biomarker;
                const auto& kind = panel.kinds[static_cast<std::size_t>(k)];
                double v;
                if (detail::parse_double(cell, v)) {
                    rec.x[static_cast<std::size_t>(k)] = v;
                } else if (kind.type == BiomarkerType::Categorical) {
                    auto& labels = out.label_maps[static_cast<std::size_t>(k)];
                    auto it = labels.find(cell);
                    if (it == labels.end()) {
                        const int next = static_cast<int>(labels.size()) + 1;
                        if (next > kind.levels)
                            throw ConfigError("line " + std::to_string(line_no) +
                                              ": more categorical labels than declared levels");
                        it = labels.emplace(cell, next).first;
                    }
                    rec.x[static_cast<std::size_t>(k)] = it->second;
                } else {
                    throw ConfigError("line " + std::to_string(line_no) + ": bad value for " +
                                      panel.names[static_cast<std::size_t>(k)]);
                }
            }
        }
        out.dataset.records.push_back(std::move(rec));
    }
    out.dataset.arms = std::max(2, max_arm);
    out.dataset.outcome = outcome_declared
                              ? declared_kind
                              : (all_01 && !out.dataset.records.empty() ? OutcomeKind::Binary
                                                                        : OutcomeKind::Continuous);
    // observed ranges for continuous biomarkers
    for (int k = 0; k < panel.size(); ++k) {
        auto& kind = out.dataset.panel.kinds[static_cast<std::size_t>(k)];
        if (!kind.is_continuous()) continue;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& rec : out.dataset.records) {
            lo = std::min(lo, rec.x[static_cast<std::size_t>(k)]);
            hi = std::max(hi, rec.x[static_cast<std::size_t>(k)]);
        }
        if (!(lo < hi))
            throw ConfigError("continuous biomarker " + panel.names[static_cast<std::size_t>(k)] +
                              " has a degenerate observed range");
        kind.range_lo = lo;
        kind.range_hi = hi;
    }
    const ValidationReport report = validate_dataset(out.dataset);
    if (!report.ok)
        throw ConfigError("dataset validation failed: record " +
                          std::to_string(report.violations.front().record_id) + ": " +
                          report.violations.front().message);
    return out;
}

}  // namespace asied
