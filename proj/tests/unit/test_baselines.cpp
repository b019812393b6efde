#include <doctest.h>

#include <cmath>

#include "headwayrl/baselines.hpp"
#include "headwayrl/rng.hpp"
#include "helpers.hpp"

using namespace headwayrl;

namespace {

DemandSet toy_demand() {
    return make_demand_set({testutil::rec("a", 5, 1, 3), testutil::rec("b", 20, 1, 2),
                            testutil::rec("c", 48, 2, 3), testutil::rec("d", 70, 1, 3)});
}

GaParams quick_params(std::uint64_t seed = 1) {
    GaParams p;
    p.population = 10;
    p.generations = 8;
    p.seed = seed;
    return p;
}

/// all strictly valid timetables over a tiny decision window, by brute force
std::vector<Timetable> enumerate_feasible(const LineConfig& line) {
    const int interior = line.service_end - line.service_start - 1;
    REQUIRE(interior <= 14);
    std::vector<Timetable> out;
    for (unsigned mask = 0; mask < (1u << interior); ++mask) {
        Timetable t;
        t.minutes.push_back(line.service_start);
        for (int i = 0; i < interior; ++i)
            if (mask & (1u << i)) t.minutes.push_back(line.service_start + 1 + i);
        t.minutes.push_back(line.service_end);
        try {
            validate_timetable_strict(t, line);
        } catch (const std::invalid_argument&) {
            continue;
        }
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace

TEST_CASE("repair keeps valid timetables unchanged and is idempotent") {
    LineConfig line = testutil::small_line(3); // window [0,100], band [2,15]
    std::vector<int> valid{0, 10, 25, 40, 55, 70, 85, 100};
    CHECK(repair_departures(valid, line) == valid);

    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> raw;
        for (int m = 0; m <= 100; ++m)
            if (rng.bernoulli(0.2)) raw.push_back(m);
        auto once = repair_departures(raw, line);
        CHECK_NOTHROW(validate_timetable_strict(Timetable{once}, line));
        CHECK(repair_departures(once, line) == once);
    }
}

TEST_CASE("repair merges tight gaps and splits wide ones") {
    LineConfig line = testutil::small_line(3);
    // gap of 1 after minute 10: the later departure goes away
    auto merged = repair_departures({10, 11}, line);
    CHECK(std::find(merged.begin(), merged.end(), 11) == merged.end());
    CHECK(std::find(merged.begin(), merged.end(), 10) != merged.end());

    // bare endpoints: the 100-minute gap gets midpoint splits
    auto split = repair_departures({}, line);
    CHECK(split.front() == 0);
    CHECK(split.back() == 100);
    for (std::size_t i = 1; i < split.size(); ++i) {
        CHECK(split[i] - split[i - 1] <= line.max_interval);
        CHECK(split[i] - split[i - 1] >= line.min_interval);
    }

    // a final gap below the minimum interval survives repair
    auto final_gap = repair_departures({0, 15, 30, 45, 60, 75, 90, 99}, line);
    CHECK(final_gap.back() == 100);
    CHECK(final_gap[final_gap.size() - 2] == 99);
}

TEST_CASE("fitness on empty demand is provided capacity plus departure cost") {
    LineConfig line = testutil::small_line(3);
    auto tt = TravelTimeTable::constant(3, 2.0);
    DemandSet empty;
    FitnessWeights w; // w_gap 1, w_nsp 5, w_nd 1
    const double e = trip_capacity(line);
    CHECK(fitness(Timetable{{0, 50}}, empty, line, tt, w) == doctest::Approx(2 * e + 2));
    FitnessWeights heavy{2.0, 5.0, 3.0};
    CHECK(fitness(Timetable{{0, 50}}, empty, line, tt, heavy) ==
          doctest::Approx(2 * e * 2.0 + 2 * 3.0));
}

TEST_CASE("fitness reduces to the departure cost when provided equals consumed") {
    // alpha * C * (K-1) = 5 with one segment; 5 riders per trip consume exactly 5
    LineConfig line = testutil::small_line(2, 10, 5);
    line.comfort_coefficient = 1.0;
    auto tt = TravelTimeTable::constant(2, 2.0);
    std::vector<PassengerRecord> recs;
    for (int trip : {0, 50}) {
        for (int i = 0; i < 5; ++i)
            recs.push_back(
                testutil::rec("p" + std::to_string(trip) + "_" + std::to_string(i),
                              trip, 1, 2));
    }
    FitnessWeights w;
    CHECK(fitness(Timetable{{0, 50}}, make_demand_set(std::move(recs)), line, tt, w) ==
          doctest::Approx(2.0));
}

TEST_CASE("fitness on a four-station toy matches the hand computation") {
    LineConfig line = testutil::small_line(4, 2, 2);
    line.comfort_coefficient = 1.0; // e_m = 6
    auto tt = TravelTimeTable::constant(4, 1.0);
    // bus at 10: a (1->3, waits 5, 2 segments), b (2->4 at 11, waits 0, 2 segments)
    // bus at 30: c (1->4, waits 10, 3 segments); d at 90: stranded never (fits)
    DemandSet d = make_demand_set({testutil::rec("a", 5, 1, 3), testutil::rec("b", 11, 2, 4),
                                   testutil::rec("c", 20, 1, 4), testutil::rec("d", 90, 1, 2)});
    FitnessWeights w;
    // trips at 10 (o=4), 30 (o=3), 95 (o=1); all in distinct half-hour buckets
    const double expected = (6 - 4) + (6 - 3) + (6 - 1) + 0 * 5.0 + 3 * 1.0;
    CHECK(fitness(Timetable{{10, 30, 95}}, d, line, tt, w) == doctest::Approx(expected));
}

TEST_CASE("zero generations returns the best of the random initial population") {
    LineConfig line = testutil::small_line(3);
    auto tt = TravelTimeTable::constant(3, 2.0);
    GaParams p = quick_params();
    p.generations = 0;
    SearchResult r = ga_optimize(toy_demand(), line, tt, p, FitnessWeights{});
    CHECK(r.trace.size() == 1);
    CHECK(r.trace[0].best == doctest::Approx(r.best_fitness));
    CHECK(r.trace[0].mean >= r.trace[0].best);
    CHECK_NOTHROW(validate_timetable_strict(r.best, line));
}

TEST_CASE("elitism makes the fitness trace non-increasing") {
    LineConfig line = testutil::small_line(3);
    auto tt = TravelTimeTable::constant(3, 2.0);
    SearchResult r = ga_optimize(toy_demand(), line, tt, quick_params(5), FitnessWeights{});
    for (std::size_t i = 1; i < r.trace.size(); ++i)
        CHECK(r.trace[i].best <= r.trace[i - 1].best);
    CHECK(r.trace.back().best == doctest::Approx(r.best_fitness));
}

TEST_CASE("ga runs are seed deterministic") {
    LineConfig line = testutil::small_line(3);
    auto tt = TravelTimeTable::constant(3, 2.0);
    SearchResult a = ga_optimize(toy_demand(), line, tt, quick_params(9), FitnessWeights{});
    SearchResult b = ga_optimize(toy_demand(), line, tt, quick_params(9), FitnessWeights{});
    CHECK(a.best.minutes == b.best.minutes);
    CHECK(a.best_fitness == b.best_fitness);
    SearchResult c = ga_optimize(toy_demand(), line, tt, quick_params(10), FitnessWeights{});
    CHECK((a.best.minutes != c.best.minutes || a.best_fitness == c.best_fitness));
}

TEST_CASE("ga reaches the exhaustive optimum on a tiny window") {
    LineConfig line = testutil::small_line(3);
    line.service_start = 0;
    line.service_end = 13; // 12 interior decision minutes
    line.min_interval = 2;
    line.max_interval = 8;
    auto tt = TravelTimeTable::constant(3, 1.0);
    DemandSet d = make_demand_set({testutil::rec("a", 2, 1, 3), testutil::rec("b", 6, 2, 3),
                                   testutil::rec("c", 9, 1, 2)});
    FitnessWeights w;

    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : enumerate_feasible(line))
        best = std::min(best, fitness(t, d, line, tt, w));

    GaParams p = quick_params(3);
    p.population = 20;
    p.generations = 30;
    SearchResult r = ga_optimize(d, line, tt, p, w);
    CHECK(r.best_fitness <= best * 1.05 + 1e-9);
    CHECK(r.best_fitness >= best - 1e-9); // the oracle really is the optimum
}

TEST_CASE("memetic with zero budget reproduces the plain ga exactly") {
    LineConfig line = testutil::small_line(3);
    auto tt = TravelTimeTable::constant(3, 2.0);
    GaParams p = quick_params(21);
    p.ls_budget = 0;
    SearchResult ga = ga_optimize(toy_demand(), line, tt, p, FitnessWeights{});
    SearchResult mem = memetic_optimize(toy_demand(), line, tt, p, FitnessWeights{});
    CHECK(ga.best.minutes == mem.best.minutes);
    CHECK(ga.best_fitness == mem.best_fitness);
    REQUIRE(ga.trace.size() == mem.trace.size());
    for (std::size_t i = 0; i < ga.trace.size(); ++i)
        CHECK(ga.trace[i].best == mem.trace[i].best);
}

TEST_CASE("memetic search never loses to the paired ga") {
    LineConfig line = testutil::small_line(3);
    auto tt = TravelTimeTable::constant(3, 2.0);
    DemandSet d = toy_demand();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        GaParams p = quick_params(seed);
        p.ls_budget = 30;
        SearchResult ga = ga_optimize(d, line, tt, p, FitnessWeights{});
        SearchResult mem = memetic_optimize(d, line, tt, p, FitnessWeights{});
        CAPTURE(seed);
        CHECK(mem.best_fitness <= ga.best_fitness + 1e-9);
        CHECK_NOTHROW(validate_timetable_strict(mem.best, line));
    }
}

TEST_CASE("ga parameter validation and trace csv") {
    GaParams p;
    p.population = 1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = GaParams{};
    p.mutation_rate = 1.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    GaParams back = GaParams::from_json_text("{\"population\": 12, \"seed\": 4}");
    CHECK(back.population == 12);
    CHECK(back.seed == 4);

    std::string csv = fitness_trace_csv({{0, 5.0, 9.5}, {1, 4.0, 8.0}});
    CHECK(csv == "generation,best,mean\n0,5,9.5\n1,4,8\n");

    LineConfig tight = testutil::small_line(3);
    tight.min_interval = 10;
    tight.max_interval = 15; // midpoint halves could undercut the minimum
    auto tt = TravelTimeTable::constant(3, 2.0);
    CHECK_THROWS_AS(ga_optimize(toy_demand(), tight, tt, GaParams{}, FitnessWeights{}),
                    std::invalid_argument);
}

TEST_CASE("scheme one state stacks four minutes of station telemetry") {
    auto scheme = ablation_scheme_one();
    LineConfig line = testutil::small_line(5);
    CHECK(scheme->state_dim(line) == 4 * 4 * 4);
    CHECK(scheme->history_length() == 4);

    auto tt = TravelTimeTable::constant(5, 2.0);
    DemandSet d = make_demand_set({testutil::rec("a", 3, 1, 5)});
    Env env(line, tt, d, RewardParams{}, scheme.get());
    CHECK(env.observe().size() == 4 * 4 * 4);
    env.step(1);
    auto s = env.observe();
    CHECK(s.size() == 4 * 4 * 4);
    // a bus is now on the first segment of the newest snapshot
    const std::size_t newest = 3 * 16;
    const std::size_t presence_base = newest + 2 * 4;
    CHECK(s[presence_base + 0] == doctest::Approx(1.0));
}

TEST_CASE("scheme one reward counts empty seats and waiting heads") {
    auto scheme = ablation_scheme_one();
    LineConfig line = testutil::small_line(3, 45, 30);

    MinuteTelemetry t;
    t.line = &line;
    t.minute = 50;
    SUBCASE("idle line gives zero reward") {
        t.waiting.assign(4, 0);
        CHECK(scheme->reward(t, 0, RewardParams{}) == doctest::Approx(0.0));
        CHECK(scheme->reward(t, 1, RewardParams{}) == doctest::Approx(0.0));
    }
    SUBCASE("one bus with ten empty seats and five waiting") {
        t.waiting.assign(4, 0);
        t.waiting[1] = 5;
        t.road_buses.push_back({1, 0.5, line.seats - 10});
        CHECK(scheme->reward(t, 0, RewardParams{}) == doctest::Approx(-15.0));
    }
    SUBCASE("overfull buses never earn phantom seats") {
        t.waiting.assign(4, 0);
        t.road_buses.push_back({1, 0.5, line.seats + 7}); // standing room
        CHECK(scheme->reward(t, 0, RewardParams{}) == doctest::Approx(0.0));
    }
}

TEST_CASE("scheme two state and reward come from the uncapped trip") {
    auto scheme = ablation_scheme_two();
    LineConfig line = testutil::small_line(3, 2, 2); // tiny capacity
    line.comfort_coefficient = 1.0;                  // e_m = 4
    auto tt = TravelTimeTable::constant(3, 2.0);

    SUBCASE("no demand pays the full empty capacity") {
        DemandSet empty;
        Env env(line, tt, empty, RewardParams{}, scheme.get());
        CHECK(env.observe() == std::vector<double>{0.0, 0.0, 0.0});
        StepResult r = env.step(0);
        CHECK(r.transition.r == doctest::Approx(-trip_capacity(line)));
    }

    SUBCASE("boarding ignores the capacity limit") {
        // 5 passengers swamp the 2-seat bus; the uncapped load sees all 5
        std::vector<PassengerRecord> recs;
        for (int i = 0; i < 5; ++i)
            recs.push_back(testutil::rec("p" + std::to_string(i), 0, 1, 3));
        Env env(line, tt, make_demand_set(std::move(recs)), RewardParams{}, scheme.get());
        auto s = env.observe();
        REQUIRE(s.size() == 3);
        CHECK(s[1] == doctest::Approx(5.0)); // peak uncapped load
        // r = -(e - o_uncapped) - boardings = -(4 - 10) - 5 = 1
        StepResult r = env.step(0);
        CHECK(r.transition.r == doctest::Approx(1.0));
    }
}

TEST_CASE("uncapped consumption equals capped consumption when capacity never binds") {
    LineConfig line = testutil::small_line(4, 50, 40);
    auto tt = TravelTimeTable::constant(4, 2.0);
    DemandSet d = toy_demand();

    StationQueues q(d, line);
    TripResult capped = simulate_trip(q, line, tt, 30, false);
    LineConfig uncapped_line = line;
    uncapped_line.capacity = 1 << 20;
    TripResult uncapped = simulate_trip(q, uncapped_line, tt, 30, false);
    CHECK(capped.capacity_used == uncapped.capacity_used);
    CHECK(capped.max_onboard == uncapped.max_onboard);
}

TEST_CASE("uncapped onboard profile obeys the running-sum recurrence") {
    LineConfig line = testutil::small_line(4, 1, 1);
    line.capacity = 1 << 20;
    auto tt = TravelTimeTable::constant(4, 2.0);
    DemandSet d = toy_demand();
    StationQueues q(d, line);
    TripResult t = simulate_trip(q, line, tt, 30, false);
    long running = 0;
    for (int k = 1; k <= 3; ++k) {
        running += t.boardings[static_cast<std::size_t>(k)] -
                   t.alightings[static_cast<std::size_t>(k)];
        CHECK(t.onboard_profile[static_cast<std::size_t>(k)] == running);
    }
}

TEST_CASE("variant tags build the right schemes") {
    LineConfig line = testutil::small_line(5);
    CHECK(make_scheme("default")->state_dim(line) == 6);
    CHECK(make_scheme("drop-feature:x1x2")->state_dim(line) == 4);
    CHECK(make_scheme("drop-feature:x3")->state_dim(line) == 5);
    CHECK(make_scheme("drop-feature:x4")->state_dim(line) == 5);
    CHECK(make_scheme("drop-feature:x5")->state_dim(line) == 5);
    CHECK(make_scheme("drop-feature:x6")->state_dim(line) == 5);
    CHECK(make_scheme("scheme-one")->state_dim(line) == 64);
    CHECK(make_scheme("scheme-two")->state_dim(line) == 3);
    CHECK_THROWS_AS(make_scheme("nonsense"), std::invalid_argument);
    CHECK_THROWS_AS(make_scheme("drop-feature:x9"), std::invalid_argument);
}

TEST_CASE("dropped features disappear from the observation") {
    LineConfig line = testutil::small_line(3);
    line.service_start = 720;
    line.service_end = 820;
    auto tt = TravelTimeTable::constant(3, 2.0);
    DemandSet empty;
    auto no_time = make_scheme("drop-feature:x1x2");
    Env env(line, tt, empty, RewardParams{}, no_time.get());
    auto s = env.observe();
    REQUIRE(s.size() == 4);
    for (double v : s) CHECK(v == doctest::Approx(0.0)); // time features gone, rest zero
}

TEST_CASE("variant statistics summarize the episode spread") {
    std::vector<RolloutResult> eps(5);
    eps[0].mean_reward = 0.5;
    eps[0].metrics.nd = 10;
    eps[1].mean_reward = 0.7;
    eps[1].metrics.nd = 12;
    eps[2].mean_reward = 0.6;
    eps[2].metrics.nd = 10;
    eps[3].mean_reward = 0.4;
    eps[3].metrics.nd = 11;
    eps[4].mean_reward = 0.6;
    eps[4].metrics.nd = 10;
    VariantStats s = variant_statistics("default", eps);
    CHECK(s.nd_max == 12);
    CHECK(s.nd_min == 10);
    CHECK(s.nd_mode == 10);
    CHECK(s.reward_max == doctest::Approx(0.7));
    CHECK(s.reward_min == doctest::Approx(0.4));
    const double nd_mean = (10 + 12 + 10 + 11 + 10) / 5.0;
    double var = 0;
    for (int nd : {10, 12, 10, 11, 10}) var += (nd - nd_mean) * (nd - nd_mean);
    CHECK(s.nd_variance == doctest::Approx(var / 5.0));

    std::string csv = variant_stats_csv({s});
    CHECK(csv.rfind("variant,reward_max,reward_min,reward_variance,nd_max,nd_min,nd_mode,"
                    "nd_variance\n",
                    0) == 0);
    CHECK_THROWS_AS(variant_statistics("x", {}), std::invalid_argument);
}
