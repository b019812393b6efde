#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "headwayrl/line_model.hpp"
#include "headwayrl/od_data.hpp"
#include "headwayrl/simulator.hpp"

namespace headwayrl {

struct RewardParams {
    double omega = 1.0 / 5000.0; // waiting-time penalty weight
    double beta = 0.2;           // stranding penalty weight
    double mu = 5000.0;          // waiting-time normalizer
};

RewardParams reward_params_from_json_text(const std::string& text);
std::string reward_params_to_json_text(const RewardParams& p);

/// Per-minute reward. Both branches read the same hypothetical trip:
///   a=0: 1 - o/e - omega*W - beta*ds
///   a=1:     o/e            - beta*ds
double reward_for(const TripResult& trip, int action, const RewardParams& params, double e_m);

struct Transition {
    std::vector<double> s;
    int a = 0;
    double r = 0.0;
    std::vector<double> s_next;
    bool done = false;
};

/// Everything a state/reward scheme may ask about the current minute.
/// Which parts get filled is driven by the scheme's needs() mask.
struct MinuteTelemetry {
    int minute = 0;
    int t_ml = 0;
    double e_m = 0.0;
    const LineConfig* line = nullptr;
    std::optional<TripResult> trip;          // capped hypothetical departure
    std::optional<TripResult> trip_uncapped; // same trip, capacity ignored
    std::vector<long> waiting;               // index 1..K-1
    std::vector<long> arrivals_15min;        // index 1..K-1
    struct RoadBus {
        int segment = 0;       // bus is between segment and segment+1
        double fraction = 0.0; // progress along the segment
        long onboard = 0;
    };
    std::vector<RoadBus> road_buses;
};

struct ClampEvent {
    int minute = 0;
    std::string feature;
    double raw = 0.0;
};

enum TelemetryNeeds : unsigned {
    kNeedTrip = 1u << 0,
    kNeedUncappedTrip = 1u << 1,
    kNeedStationCounts = 1u << 2,
};

/// State/reward design plugged into the env. The default is the
/// six-feature normalized state with the two-branch reward; the ablation
/// schemes in baselines swap in alternatives.
class StateRewardScheme {
public:
    virtual ~StateRewardScheme() = default;
    virtual std::string name() const = 0;
    virtual std::size_t state_dim(const LineConfig& line) const = 0;
    virtual unsigned needs() const { return kNeedTrip; }
    virtual int history_length() const { return 1; }
    /// history.back() is the current minute; earlier minutes precede it
    virtual std::vector<double> state(const std::vector<const MinuteTelemetry*>& history,
                                      const RewardParams& params,
                                      std::vector<ClampEvent>* clamp_log) const = 0;
    virtual double reward(const MinuteTelemetry& now, int action,
                          const RewardParams& params) const = 0;
};

/// Six normalized features: hour and minute of day, max full-load rate,
/// waiting (W/mu, clamped), capacity consumption rate (clamped), and
/// stranding scaled by vehicle capacity. Supports dropping feature groups
/// for the necessity analysis.
class DefaultScheme : public StateRewardScheme {
public:
    enum Feature : unsigned {
        kTime = 1u << 0, // x1 and x2 travel together
        kLoadRate = 1u << 1,
        kWaiting = 1u << 2,
        kConsumption = 1u << 3,
        kStranding = 1u << 4,
    };

    explicit DefaultScheme(unsigned dropped = 0) : dropped_(dropped) {}

    std::string name() const override;
    std::size_t state_dim(const LineConfig& line) const override;
    std::vector<double> state(const std::vector<const MinuteTelemetry*>& history,
                              const RewardParams& params,
                              std::vector<ClampEvent>* clamp_log) const override;
    double reward(const MinuteTelemetry& now, int action,
                  const RewardParams& params) const override;

    /// parse "x1x2" | "x3" | "x4" | "x5" | "x6" into a drop mask
    static unsigned parse_drop(const std::string& tag);

private:
    unsigned dropped_;
};

struct TraceRecord {
    int m = 0;
    std::vector<double> state;
    int action = 0;
    bool forced = false;
    double reward = 0.0;
    int t_ml = 0;
    int committed = 0;
};

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace);

struct StepResult {
    Transition transition;
    bool forced = false;
};

/// Source of the hypothetical-trip forecast behind the state features. The
/// default plays the trip against the true future arrivals (a noise-free
/// oracle); a learned demand predictor can be slotted in instead.
class TripForecaster {
public:
    virtual ~TripForecaster() = default;
    virtual TripResult forecast(StationQueues& queues, const LineConfig& line,
                                const TravelTimeTable& tt, int minute) const {
        return simulate_trip(queues, line, tt, minute, /*commit=*/false);
    }
};

/// Minute-stepped episode over one service day. Departures at the window
/// endpoints are forced; in between the env applies whatever action it is
/// given (interval rules live in the action-selection policy).
class Env {
public:
    Env(const LineConfig& line, const TravelTimeTable& tt, const DemandSet& demand,
        RewardParams params = {}, const StateRewardScheme* scheme = nullptr,
        const TripForecaster* forecaster = nullptr);

    void reset();
    /// state at the current minute; side-effect free and repeatable
    const std::vector<double>& observe();
    StepResult step(int action);

    bool done() const { return done_; }
    int minute() const { return minute_; }
    int minutes_since_departure() const;
    const std::vector<int>& departures() const { return committed_; }
    const std::vector<TripResult>& committed_trips() const { return trips_; }

    Timetable episode_to_timetable() const;

    const std::vector<TraceRecord>& trace() const { return trace_; }
    const std::vector<ClampEvent>& clamp_events() const { return clamp_log_; }

    const LineConfig& line() const { return line_; }
    const StateRewardScheme& scheme() const { return *scheme_; }
    std::size_t state_dim() const { return scheme_->state_dim(line_); }
    double departure_capacity() const { return e_m_; }
    int steps_per_episode() const { return line_.service_end - line_.service_start + 1; }

    static const StateRewardScheme& default_scheme();

private:
    void ensure_current();
    MinuteTelemetry make_telemetry(int minute);

    const LineConfig& line_;
    const TravelTimeTable& tt_;
    const DemandSet& demand_;
    RewardParams params_;
    const StateRewardScheme* scheme_;
    const TripForecaster* forecaster_;
    double e_m_ = 0.0;

    std::unique_ptr<StationQueues> queues_;
    int minute_ = 0;
    int last_departure_ = 0;
    bool any_departure_ = false;
    bool done_ = false;
    std::vector<int> committed_;
    std::vector<TripResult> trips_;

    std::deque<MinuteTelemetry> history_;
    std::vector<double> state_;
    bool state_fresh_ = false;

    std::vector<TraceRecord> trace_;
    std::vector<ClampEvent> clamp_log_;
};

} // namespace headwayrl
