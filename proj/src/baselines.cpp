#include "headwayrl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "headwayrl/rng.hpp"
#include "headwayrl/util.hpp"

namespace headwayrl {

FitnessWeights FitnessWeights::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    FitnessWeights w;
    w.w_gap = j.value("w_gap", w.w_gap);
    w.w_nsp = j.value("w_nsp", w.w_nsp);
    w.w_nd = j.value("w_nd", w.w_nd);
    return w;
}

std::string FitnessWeights::to_json_text() const {
    nlohmann::json j;
    j["w_gap"] = w_gap;
    j["w_nsp"] = w_nsp;
    j["w_nd"] = w_nd;
    return j.dump(2) + "\n";
}

double fitness(const Timetable& timetable, const DemandSet& demand, const LineConfig& line,
               const TravelTimeTable& tt, const FitnessWeights& weights) {
    EvalResult r = evaluate_timetable(demand, line, tt, timetable);
    double gap = 0.0;
    for (const auto& b : r.series) gap += std::abs(b.provided - static_cast<double>(b.consumed));
    return gap * weights.w_gap + static_cast<double>(r.metrics.nsp) * weights.w_nsp +
           static_cast<double>(r.metrics.nd) * weights.w_nd;
}

namespace {

void split_gap(std::vector<int>& out, int lo, int hi, int t_max) {
    const int gap = hi - lo;
    if (gap <= t_max) {
        out.push_back(hi);
        return;
    }
    const int mid = lo + gap / 2;
    split_gap(out, lo, mid, t_max);
    split_gap(out, mid, hi, t_max);
}

} // namespace

std::vector<int> repair_departures(std::vector<int> minutes, const LineConfig& line) {
    minutes.push_back(line.service_start);
    minutes.push_back(line.service_end);
    std::sort(minutes.begin(), minutes.end());
    minutes.erase(std::unique(minutes.begin(), minutes.end()), minutes.end());
    // clip anything outside the window
    std::erase_if(minutes, [&](int m) {
        return m < line.service_start || m > line.service_end;
    });

    std::vector<int> out{line.service_start};
    for (std::size_t i = 1; i < minutes.size(); ++i) {
        const int x = minutes[i];
        const bool is_end = (x == line.service_end);
        const int gap = x - out.back();
        if (!is_end && gap < line.min_interval) continue; // merge: drop the later departure
        if (gap > line.max_interval) {
            split_gap(out, out.back(), x, line.max_interval);
        } else {
            out.push_back(x);
        }
    }
    return out;
}

void GaParams::validate() const {
    if (population < 2) throw std::invalid_argument("population must be >= 2");
    if (generations < 0) throw std::invalid_argument("generations must be >= 0");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
        throw std::invalid_argument("crossover_rate must be a probability");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
        throw std::invalid_argument("mutation_rate must be a probability");
    if (tournament < 1) throw std::invalid_argument("tournament must be >= 1");
    if (ls_budget < 0) throw std::invalid_argument("ls_budget must be >= 0");
}

GaParams GaParams::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    GaParams p;
    p.population = j.value("population", p.population);
    p.generations = j.value("generations", p.generations);
    p.crossover_rate = j.value("crossover_rate", p.crossover_rate);
    p.mutation_rate = j.value("mutation_rate", p.mutation_rate);
    p.tournament = j.value("tournament", p.tournament);
    p.seed = j.value("seed", p.seed);
    p.ls_budget = j.value("ls_budget", p.ls_budget);
    p.validate();
    return p;
}

std::string GaParams::to_json_text() const {
    nlohmann::json j;
    j["population"] = population;
    j["generations"] = generations;
    j["crossover_rate"] = crossover_rate;
    j["mutation_rate"] = mutation_rate;
    j["tournament"] = tournament;
    j["seed"] = seed;
    j["ls_budget"] = ls_budget;
    return j.dump(2) + "\n";
}

namespace {

using Bits = std::vector<std::uint8_t>;

Bits encode(const std::vector<int>& minutes, const LineConfig& line) {
    Bits b(static_cast<std::size_t>(line.service_end - line.service_start + 1), 0);
    for (int m : minutes) b[static_cast<std::size_t>(m - line.service_start)] = 1;
    return b;
}

std::vector<int> decode(const Bits& b, const LineConfig& line) {
    std::vector<int> minutes;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (b[i]) minutes.push_back(line.service_start + static_cast<int>(i));
    return minutes;
}

struct Individual {
    Bits bits;
    double fit = 0.0;
};

struct GaRun {
    const DemandSet& demand;
    const LineConfig& line;
    const TravelTimeTable& tt;
    const GaParams& params;
    const FitnessWeights& weights;
    Rng rng;
    long evals = 0;

    explicit GaRun(const DemandSet& d, const LineConfig& l, const TravelTimeTable& t,
                   const GaParams& p, const FitnessWeights& w)
        : demand(d), line(l), tt(t), params(p), weights(w), rng(p.seed) {}

    Bits repaired(const Bits& raw) {
        return encode(repair_departures(decode(raw, line), line), line);
    }

    double eval(const Bits& b) {
        ++evals;
        return fitness(Timetable{decode(b, line)}, demand, line, tt, weights);
    }

    Individual random_individual() {
        const double p_one =
            2.0 / static_cast<double>(line.min_interval + line.max_interval);
        Bits b(static_cast<std::size_t>(line.service_end - line.service_start + 1), 0);
        for (auto& bit : b) bit = rng.bernoulli(p_one) ? 1 : 0;
        Individual ind;
        ind.bits = repaired(b);
        ind.fit = eval(ind.bits);
        return ind;
    }

    const Individual& tournament_pick(const std::vector<Individual>& pop) {
        const Individual* best = &pop[rng.below(pop.size())];
        for (int i = 1; i < params.tournament; ++i) {
            const Individual& c = pop[rng.below(pop.size())];
            if (c.fit < best->fit) best = &c;
        }
        return *best;
    }

    Bits crossover(const Bits& a, const Bits& b) {
        const std::size_t cut = 1 + rng.below(a.size() - 1);
        Bits child(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(cut));
        child.insert(child.end(), b.begin() + static_cast<std::ptrdiff_t>(cut), b.end());
        return child;
    }

    void mutate(Bits& b) {
        for (auto& bit : b)
            if (rng.bernoulli(params.mutation_rate)) bit ^= 1;
    }

    // first-improvement hill climbing on a departure list
    void local_search(Individual& ind, int budget) {
        if (budget <= 0) return;
        std::vector<int> cur = decode(ind.bits, line);
        double cur_fit = ind.fit;
        bool improved = true;
        while (improved && budget > 0) {
            improved = false;
            std::vector<std::vector<int>> moves;
            for (std::size_t i = 1; i + 1 < cur.size(); ++i) {
                for (int d : {-1, +1}) {
                    auto cand = cur;
                    cand[i] += d;
                    moves.push_back(std::move(cand));
                }
                auto cand = cur;
                cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(i));
                moves.push_back(std::move(cand));
            }
            for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
                if (cur[i + 1] - cur[i] >= 2) {
                    auto cand = cur;
                    cand.push_back(cur[i] + (cur[i + 1] - cur[i]) / 2);
                    moves.push_back(std::move(cand));
                }
            }
            for (auto& mv : moves) {
                auto rep = repair_departures(std::move(mv), line);
                if (rep == cur) continue;
                const double f = eval(encode(rep, line));
                --budget;
                if (f < cur_fit) {
                    cur = std::move(rep);
                    cur_fit = f;
                    improved = true;
                    break;
                }
                if (budget == 0) break;
            }
        }
        ind.bits = encode(cur, line);
        ind.fit = cur_fit;
    }
};

SearchResult run_search(const DemandSet& demand, const LineConfig& line,
                        const TravelTimeTable& tt, const GaParams& params,
                        const FitnessWeights& weights, bool memetic) {
    params.validate();
    line.validate();
    if (line.max_interval < 2 * line.min_interval - 1)
        throw std::invalid_argument(
            "repair cannot guarantee validity: need max_interval >= 2*min_interval - 1");

    GaRun run(demand, line, tt, params, weights);

    std::vector<Individual> pop;
    pop.reserve(static_cast<std::size_t>(params.population));
    for (int i = 0; i < params.population; ++i) pop.push_back(run.random_individual());

    auto best_of = [](const std::vector<Individual>& p) {
        std::size_t bi = 0;
        for (std::size_t i = 1; i < p.size(); ++i)
            if (p[i].fit < p[bi].fit) bi = i;
        return bi;
    };

    Individual best = pop[best_of(pop)];
    if (memetic) {
        Individual elite = best;
        run.local_search(elite, params.ls_budget);
        if (elite.fit < best.fit) {
            pop[best_of(pop)] = elite;
            best = elite;
        }
    }

    SearchResult result;
    auto record = [&](int gen, const std::vector<Individual>& p) {
        double mean = 0.0;
        for (const auto& ind : p) mean += ind.fit;
        mean /= static_cast<double>(p.size());
        result.trace.push_back(FitnessTracePoint{gen, best.fit, mean});
    };
    record(0, pop);

    for (int gen = 1; gen <= params.generations; ++gen) {
        std::vector<Individual> next;
        next.reserve(pop.size());
        next.push_back(best); // elitism of one
        while (static_cast<int>(next.size()) < params.population) {
            const Individual& pa = run.tournament_pick(pop);
            const Individual& pb = run.tournament_pick(pop);
            Bits child =
                run.rng.bernoulli(params.crossover_rate) ? run.crossover(pa.bits, pb.bits)
                                                         : pa.bits;
            run.mutate(child);
            Individual ind;
            ind.bits = run.repaired(child);
            ind.fit = run.eval(ind.bits);
            next.push_back(std::move(ind));
        }
        pop = std::move(next);

        std::size_t bi = best_of(pop);
        if (memetic) {
            Individual elite = pop[bi];
            run.local_search(elite, params.ls_budget);
            if (elite.fit < pop[bi].fit) pop[bi] = elite;
        }
        bi = best_of(pop);
        if (pop[bi].fit < best.fit) best = pop[bi];
        record(gen, pop);
    }

    result.best = Timetable{decode(best.bits, line)};
    result.best_fitness = best.fit;
    validate_timetable_strict(result.best, line);
    return result;
}

} // namespace

SearchResult ga_optimize(const DemandSet& demand, const LineConfig& line,
                         const TravelTimeTable& tt, const GaParams& params,
                         const FitnessWeights& weights) {
    GaParams p = params;
    p.ls_budget = 0;
    return run_search(demand, line, tt, p, weights, /*memetic=*/false);
}

SearchResult memetic_optimize(const DemandSet& demand, const LineConfig& line,
                              const TravelTimeTable& tt, const GaParams& params,
                              const FitnessWeights& weights) {
    return run_search(demand, line, tt, params, weights, /*memetic=*/true);
}

std::string fitness_trace_csv(const std::vector<FitnessTracePoint>& trace) {
    std::string out = "generation,best,mean\n";
    for (const auto& p : trace) {
        out += fmt_int(p.generation);
        out += ',';
        out += fmt_double(p.best);
        out += ',';
        out += fmt_double(p.mean);
        out += '\n';
    }
    return out;
}

namespace {

class SchemeOne : public StateRewardScheme {
public:
    std::string name() const override { return "scheme-one"; }

    std::size_t state_dim(const LineConfig& line) const override {
        return 4u * 4u * static_cast<std::size_t>(line.stations - 1);
    }

    unsigned needs() const override { return kNeedStationCounts; }
    int history_length() const override { return 4; }

    std::vector<double> state(const std::vector<const MinuteTelemetry*>& history,
                              const RewardParams&, std::vector<ClampEvent>*) const override {
        const LineConfig& line = *history.back()->line;
        const int segs = line.stations - 1;
        std::vector<double> s;
        s.reserve(state_dim(line));
        for (const MinuteTelemetry* t : history) {
            std::vector<double> present(static_cast<std::size_t>(segs + 1), 0.0);
            std::vector<double> fraction(static_cast<std::size_t>(segs + 1), 0.0);
            for (const auto& bus : t->road_buses) {
                present[static_cast<std::size_t>(bus.segment)] = 1.0;
                // nearest bus to the downstream station dominates
                fraction[static_cast<std::size_t>(bus.segment)] =
                    std::max(fraction[static_cast<std::size_t>(bus.segment)], bus.fraction);
            }
            for (int k = 1; k <= segs; ++k)
                s.push_back(t->waiting.empty()
                                ? 0.0
                                : static_cast<double>(t->waiting[static_cast<std::size_t>(k)]));
            for (int k = 1; k <= segs; ++k)
                s.push_back(t->arrivals_15min.empty()
                                ? 0.0
                                : static_cast<double>(
                                      t->arrivals_15min[static_cast<std::size_t>(k)]));
            for (int k = 1; k <= segs; ++k) s.push_back(present[static_cast<std::size_t>(k)]);
            for (int k = 1; k <= segs; ++k) s.push_back(fraction[static_cast<std::size_t>(k)]);
        }
        return s;
    }

    double reward(const MinuteTelemetry& now, int /*action*/,
                  const RewardParams&) const override {
        const LineConfig& line = *now.line;
        double remaining_seats = 0.0;
        for (const auto& bus : now.road_buses)
            remaining_seats += std::max(0.0, static_cast<double>(line.seats - bus.onboard));
        double waiting = 0.0;
        if (!now.waiting.empty())
            for (int k = 1; k <= line.stations - 1; ++k)
                waiting += static_cast<double>(now.waiting[static_cast<std::size_t>(k)]);
        return -(remaining_seats + waiting);
    }
};

class SchemeTwo : public StateRewardScheme {
public:
    std::string name() const override { return "scheme-two"; }
    std::size_t state_dim(const LineConfig&) const override { return 3; }
    unsigned needs() const override { return kNeedUncappedTrip; }

    std::vector<double> state(const std::vector<const MinuteTelemetry*>& history,
                              const RewardParams&, std::vector<ClampEvent>*) const override {
        const MinuteTelemetry& now = *history.back();
        const double hour = static_cast<double>(now.minute / 60);
        const double peak_load =
            now.trip_uncapped ? static_cast<double>(now.trip_uncapped->max_onboard) : 0.0;
        return {hour, peak_load, static_cast<double>(now.t_ml)};
    }

    double reward(const MinuteTelemetry& now, int /*action*/,
                  const RewardParams&) const override {
        if (!now.trip_uncapped)
            throw std::logic_error("scheme two reward needs the uncapped trip");
        const double consumed = static_cast<double>(now.trip_uncapped->capacity_used);
        const double waiting = static_cast<double>(now.trip_uncapped->boardings_total());
        return -(now.e_m - consumed) - waiting;
    }
};

} // namespace

std::unique_ptr<StateRewardScheme> ablation_scheme_one() { return std::make_unique<SchemeOne>(); }
std::unique_ptr<StateRewardScheme> ablation_scheme_two() { return std::make_unique<SchemeTwo>(); }

std::unique_ptr<StateRewardScheme> make_scheme(const std::string& variant) {
    if (variant == "default") return std::make_unique<DefaultScheme>();
    if (variant == "scheme-one") return ablation_scheme_one();
    if (variant == "scheme-two") return ablation_scheme_two();
    const std::string prefix = "drop-feature:";
    if (variant.rfind(prefix, 0) == 0)
        return std::make_unique<DefaultScheme>(
            DefaultScheme::parse_drop(variant.substr(prefix.size())));
    throw std::invalid_argument("unknown variant: " + variant);
}

VariantStats variant_statistics(const std::string& variant,
                                const std::vector<RolloutResult>& episodes) {
    if (episodes.empty()) throw std::invalid_argument("no episodes to summarize");
    VariantStats s;
    s.variant = variant;
    s.reward_max = episodes[0].mean_reward;
    s.reward_min = episodes[0].mean_reward;
    s.nd_max = episodes[0].metrics.nd;
    s.nd_min = episodes[0].metrics.nd;

    double reward_mean = 0.0, nd_mean = 0.0;
    std::map<int, int> nd_counts;
    for (const auto& e : episodes) {
        s.reward_max = std::max(s.reward_max, e.mean_reward);
        s.reward_min = std::min(s.reward_min, e.mean_reward);
        s.nd_max = std::max(s.nd_max, e.metrics.nd);
        s.nd_min = std::min(s.nd_min, e.metrics.nd);
        reward_mean += e.mean_reward;
        nd_mean += e.metrics.nd;
        nd_counts[e.metrics.nd] += 1;
    }
    const double n = static_cast<double>(episodes.size());
    reward_mean /= n;
    nd_mean /= n;
    for (const auto& e : episodes) {
        s.reward_variance += (e.mean_reward - reward_mean) * (e.mean_reward - reward_mean);
        s.nd_variance += (e.metrics.nd - nd_mean) * (e.metrics.nd - nd_mean);
    }
    s.reward_variance /= n;
    s.nd_variance /= n;

    int best_count = 0;
    for (const auto& [nd, count] : nd_counts)
        if (count > best_count) {
            best_count = count;
            s.nd_mode = nd;
        }
    return s;
}

std::string variant_stats_csv(const std::vector<VariantStats>& rows) {
    std::string out =
        "variant,reward_max,reward_min,reward_variance,nd_max,nd_min,nd_mode,nd_variance\n";
    for (const auto& r : rows) {
        out += r.variant;
        out += ',';
        out += fmt_double(r.reward_max);
        out += ',';
        out += fmt_double(r.reward_min);
        out += ',';
        out += fmt_double(r.reward_variance);
        out += ',';
        out += fmt_int(r.nd_max);
        out += ',';
        out += fmt_int(r.nd_min);
        out += ',';
        out += fmt_int(r.nd_mode);
        out += ',';
        out += fmt_double(r.nd_variance);
        out += '\n';
    }
    return out;
}

} // namespace headwayrl
