#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "headwayrl/agent.hpp"
#include "headwayrl/env.hpp"
#include "headwayrl/line_model.hpp"
#include "headwayrl/od_data.hpp"
#include "headwayrl/simulator.hpp"

namespace headwayrl {

/// Weighted objective for the search baselines (lower is better):
/// per-half-hour |provided - consumed| capacity mismatch, stranding events,
/// and departure count.
struct FitnessWeights {
    double w_gap = 1.0;
    double w_nsp = 5.0;
    double w_nd = 1.0;

    static FitnessWeights from_json_text(const std::string& text);
    std::string to_json_text() const;
};

double fitness(const Timetable& timetable, const DemandSet& demand, const LineConfig& line,
               const TravelTimeTable& tt, const FitnessWeights& weights);

/// Greedy left-to-right repair into strict validity: gaps below T_min drop
/// the later departure (the fixed final departure is exempt), gaps above
/// T_max split at their midpoint, recursively. Deterministic, idempotent.
/// Guaranteed valid when T_max >= 2*T_min - 1.
std::vector<int> repair_departures(std::vector<int> minutes, const LineConfig& line);

struct GaParams {
    int population = 30;
    int generations = 60;
    double crossover_rate = 0.9;
    double mutation_rate = 0.01; // per-bit flip probability
    int tournament = 3;
    std::uint64_t seed = 0;
    int ls_budget = 40; // local-search fitness evaluations per generation (memetic only)

    void validate() const;
    static GaParams from_json_text(const std::string& text);
    std::string to_json_text() const;
};

struct FitnessTracePoint {
    int generation = 0;
    double best = 0.0;
    double mean = 0.0;
};

struct SearchResult {
    Timetable best;
    double best_fitness = 0.0;
    std::vector<FitnessTracePoint> trace;
};

/// Tournament selection, single-point crossover on the minute bit vector,
/// per-bit mutation, repair after every operator, elitism of one.
SearchResult ga_optimize(const DemandSet& demand, const LineConfig& line,
                         const TravelTimeTable& tt, const GaParams& params,
                         const FitnessWeights& weights);

/// ga_optimize plus per-generation first-improvement hill climbing on the
/// elite: shift each departure by +-1 minute, drop a departure, or insert
/// one at a gap midpoint, spending at most ls_budget evaluations.
SearchResult memetic_optimize(const DemandSet& demand, const LineConfig& line,
                              const TravelTimeTable& tt, const GaParams& params,
                              const FitnessWeights& weights);

std::string fitness_trace_csv(const std::vector<FitnessTracePoint>& trace);

/// Station-level stacked state (4 minutes x [waiting, 15-min arrivals, bus
/// presence, bus position] per station) with the negated
/// empty-seats-plus-waiting reward.
std::unique_ptr<StateRewardScheme> ablation_scheme_one();

/// Three-feature state [hour, peak uncapped load, interval] with the
/// negated unused-capacity-plus-waiting reward; boarding ignores the
/// capacity limit.
std::unique_ptr<StateRewardScheme> ablation_scheme_two();

/// variant tag -> scheme: "default", "scheme-one", "scheme-two",
/// "drop-feature:<x1x2|x3|x4|x5|x6>"
std::unique_ptr<StateRewardScheme> make_scheme(const std::string& variant);

/// Post-convergence spread statistics of one trained variant.
struct VariantStats {
    std::string variant;
    double reward_max = 0.0;
    double reward_min = 0.0;
    double reward_variance = 0.0;
    int nd_max = 0;
    int nd_min = 0;
    int nd_mode = 0;
    double nd_variance = 0.0;
};

VariantStats variant_statistics(const std::string& variant,
                                const std::vector<RolloutResult>& episodes);
std::string variant_stats_csv(const std::vector<VariantStats>& rows);

} // namespace headwayrl
