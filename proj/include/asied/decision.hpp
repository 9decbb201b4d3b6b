#pragma once

#include <optional>
#include <string>

#include "asied/grid.hpp"
#include "asied/util.hpp"

namespace asied {

// Multilevel target product profile: minimum meaningful effect (LRV), target
// effect (TV > LRV), and the confidence thresholds driving the zones.
struct Tpp {
    double lrv = 2.37;
    double tv = 3.08;
    double xi1 = 0.8;
    double xi2 = 0.1;
};

inline void check_tpp(const Tpp& tpp) {
    if (!(tpp.tv > tpp.lrv)) throw ConfigError("TV must exceed LRV");
    if (!(tpp.xi1 > 0.0 && tpp.xi1 < 1.0) || !(tpp.xi2 > 0.0 && tpp.xi2 < 1.0))
        throw ConfigError("xi1 and xi2 must lie in (0,1)");
}

enum class Zone { Go, Stop, Gray };

inline std::string zone_name(Zone z) {
    switch (z) {
        case Zone::Go: return "Go";
        case Zone::Stop: return "Stop";
        case Zone::Gray: return "Gray";
    }
    return "?";
}

// Go if Pr(delta >= LRV) >= xi1; Stop if additionally Pr(delta >= TV) < xi2
// fails the Go test; Gray otherwise.
inline Zone classify_zone(double pr_lrv, double pr_tv, const Tpp& tpp) {
    if (pr_lrv >= tpp.xi1) return Zone::Go;
    if (pr_tv < tpp.xi2) return Zone::Stop;
    return Zone::Gray;
}

enum class InterimKind {
    ContinueAll,            // step 1
    EnrichGo,               // step 2
    StopFutility,           // step 3
    SecondInterimAll,       // step 4
    SecondInterimEnriched,  // step 5
};

inline std::string interim_name(InterimKind k) {
    switch (k) {
        case InterimKind::ContinueAll: return "ContinueAll";
        case InterimKind::EnrichGo: return "EnrichGo";
        case InterimKind::StopFutility: return "StopFutility";
        case InterimKind::SecondInterimAll: return "SecondInterimAll";
        case InterimKind::SecondInterimEnriched: return "SecondInterimEnriched";
    }
    return "?";
}

struct InterimDecision {
    InterimKind kind = InterimKind::StopFutility;
    GridRegion region;  // nonempty for EnrichGo / SecondInterimEnriched
};

struct CandidateZone {
    GridRegion region;
    Zone zone = Zone::Stop;
};

// First-interim steps 1-5. The all-comers zone takes precedence; subgroup
// rules apply only when all-comers is Stop.
inline InterimDecision interim_decision(Zone zone_all,
                                        const std::optional<CandidateZone>& candidate) {
    InterimDecision d;
    if (zone_all == Zone::Go) {
        d.kind = InterimKind::ContinueAll;
        return d;
    }
    if (zone_all == Zone::Gray) {
        d.kind = InterimKind::SecondInterimAll;
        return d;
    }
    if (candidate && candidate->zone == Zone::Go) {
        if (candidate->region.empty())
            throw RuntimeFailure("enrichment decision with an empty region");
        d.kind = InterimKind::EnrichGo;
        d.region = candidate->region;
        return d;
    }
    if (candidate && candidate->zone == Zone::Gray) {
        if (candidate->region.empty())
            throw RuntimeFailure("enrichment decision with an empty region");
        d.kind = InterimKind::SecondInterimEnriched;
        d.region = candidate->region;
        return d;
    }
    d.kind = InterimKind::StopFutility;
    return d;
}

enum class SecondKind {
    ContinueAllToN,      // run the all-comer population to N
    EnrichGo,            // enrich now, run the subgroup to N
    ContinueEnrichedToN, // keep the enriched population to N
    StopFutility,
};

inline std::string second_name(SecondKind k) {
    switch (k) {
        case SecondKind::ContinueAllToN: return "ContinueAllToN";
        case SecondKind::EnrichGo: return "EnrichGo";
        case SecondKind::ContinueEnrichedToN: return "ContinueEnrichedToN";
        case SecondKind::StopFutility: return "StopFutility";
    }
    return "?";
}

struct SecondDecision {
    SecondKind kind = SecondKind::StopFutility;
    GridRegion region;
};

// Second interim after step 5: the enriched subgroup either stops for
// futility or continues to N.
inline SecondDecision second_interim_enriched(Zone zone_enriched, const GridRegion& frozen) {
    SecondDecision d;
    if (zone_enriched == Zone::Stop) {
        d.kind = SecondKind::StopFutility;
        return d;
    }
    d.kind = SecondKind::ContinueEnrichedToN;
    d.region = frozen;
    return d;
}

// Second interim after step 4: outcomes are restricted to steps 1-3. A Gray
// all-comers zone maps to continue-all (the final analysis settles a); a
// Stop with only a Gray candidate no longer qualifies for enrichment and
// stops for futility.
inline SecondDecision second_interim_all_comers(Zone zone_all,
                                                const std::optional<CandidateZone>& candidate) {
    const InterimDecision first = interim_decision(zone_all, candidate);
    SecondDecision d;
    switch (first.kind) {
        case InterimKind::ContinueAll:
        case InterimKind::SecondInterimAll:
            d.kind = SecondKind::ContinueAllToN;
            return d;
        case InterimKind::EnrichGo:
            d.kind = SecondKind::EnrichGo;
            d.region = first.region;
            return d;
        case InterimKind::StopFutility:
        case InterimKind::SecondInterimEnriched:
            d.kind = SecondKind::StopFutility;
            return d;
    }
    return d;
}

// Final recommendation a: 2 = Go for all-comers, 1 = Go for a subgroup,
// 0 = no recommendation.
struct FinalRec {
    int a = 0;
    GridRegion region;  // nonempty iff a = 1
};

inline FinalRec final_after_early_stop() { return FinalRec{}; }

// Completed trial that stayed with all-comers: Go for all-comers wins;
// otherwise a final Go subgroup earns a = 1; every residual zone pattern
// (Gray for all-comers, Stop with a Gray-or-worse subgroup) is a = 0.
inline FinalRec final_all_comers(Zone zone_all, const std::optional<CandidateZone>& candidate) {
    FinalRec rec;
    if (zone_all == Zone::Go) {
        rec.a = 2;
        return rec;
    }
    if (zone_all == Zone::Stop && candidate && candidate->zone == Zone::Go) {
        rec.a = 1;
        rec.region = candidate->region;
    }
    return rec;
}

// Completed trial on a frozen enriched region.
inline FinalRec final_enriched(Zone zone_enriched, const GridRegion& frozen) {
    FinalRec rec;
    if (zone_enriched == Zone::Go) {
        rec.a = 1;
        rec.region = frozen;
    }
    return rec;
}

}  // namespace asied
