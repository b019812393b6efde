#include "headwayrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "headwayrl/util.hpp"

namespace headwayrl {

RewardParams reward_params_from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    RewardParams p;
    p.omega = j.value("omega", p.omega);
    p.beta = j.value("beta", p.beta);
    p.mu = j.value("mu", p.mu);
    if (!(p.mu > 0.0)) throw std::invalid_argument("mu must be positive");
    return p;
}

std::string reward_params_to_json_text(const RewardParams& p) {
    nlohmann::json j;
    j["omega"] = p.omega;
    j["beta"] = p.beta;
    j["mu"] = p.mu;
    return j.dump(2) + "\n";
}

double reward_for(const TripResult& trip, int action, const RewardParams& params, double e_m) {
    if (!(e_m > 0.0)) throw std::invalid_argument("e_m must be positive");
    const double rate = static_cast<double>(trip.capacity_used) / e_m;
    const double ds = static_cast<double>(stranding_total(trip));
    if (action == 0)
        return 1.0 - rate - params.omega * trip.waiting_total - params.beta * ds;
    return rate - params.beta * ds;
}

std::string DefaultScheme::name() const {
    if (dropped_ == 0) return "default";
    std::string tag = "default-drop";
    if (dropped_ & kTime) tag += ":x1x2";
    if (dropped_ & kLoadRate) tag += ":x3";
    if (dropped_ & kWaiting) tag += ":x4";
    if (dropped_ & kConsumption) tag += ":x5";
    if (dropped_ & kStranding) tag += ":x6";
    return tag;
}

std::size_t DefaultScheme::state_dim(const LineConfig&) const {
    std::size_t n = 6;
    if (dropped_ & kTime) n -= 2;
    if (dropped_ & kLoadRate) n -= 1;
    if (dropped_ & kWaiting) n -= 1;
    if (dropped_ & kConsumption) n -= 1;
    if (dropped_ & kStranding) n -= 1;
    return n;
}

unsigned DefaultScheme::parse_drop(const std::string& tag) {
    if (tag == "x1x2") return kTime;
    if (tag == "x3") return kLoadRate;
    if (tag == "x4") return kWaiting;
    if (tag == "x5") return kConsumption;
    if (tag == "x6") return kStranding;
    throw std::invalid_argument("unknown feature tag: " + tag);
}

std::vector<double> DefaultScheme::state(const std::vector<const MinuteTelemetry*>& history,
                                         const RewardParams& params,
                                         std::vector<ClampEvent>* clamp_log) const {
    const MinuteTelemetry& now = *history.back();
    const int m = now.minute;

    double x3 = 0.0, x4 = 0.0, x5 = 0.0, x6 = 0.0;
    if (now.trip) {
        const TripResult& t = *now.trip;
        const double cap = static_cast<double>(now.line->capacity);
        x3 = static_cast<double>(t.max_onboard) / cap;
        x4 = t.waiting_total / params.mu;
        if (x4 > 1.0) {
            if (clamp_log) clamp_log->push_back({m, "x4", x4});
            log::debug("x4 clamped at minute " + fmt_int(m) + " (raw " + fmt_double(x4) + ")");
            x4 = 1.0;
        }
        x5 = static_cast<double>(t.capacity_used) / now.e_m;
        if (x5 > 1.0) {
            if (clamp_log) clamp_log->push_back({m, "x5", x5});
            log::debug("x5 clamped at minute " + fmt_int(m) + " (raw " + fmt_double(x5) + ")");
            x5 = 1.0;
        }
        x6 = std::min(static_cast<double>(stranding_total(t)) / cap, 1.0);
    }

    std::vector<double> s;
    s.reserve(6);
    if (!(dropped_ & kTime)) {
        s.push_back(static_cast<double>(m / 60) / 24.0);
        s.push_back(static_cast<double>(m % 60) / 60.0);
    }
    if (!(dropped_ & kLoadRate)) s.push_back(x3);
    if (!(dropped_ & kWaiting)) s.push_back(x4);
    if (!(dropped_ & kConsumption)) s.push_back(x5);
    if (!(dropped_ & kStranding)) s.push_back(x6);
    return s;
}

double DefaultScheme::reward(const MinuteTelemetry& now, int action,
                             const RewardParams& params) const {
    if (!now.trip) throw std::logic_error("default scheme reward needs the hypothetical trip");
    return reward_for(*now.trip, action, params, now.e_m);
}

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace) {
    std::string out;
    for (const auto& t : trace) {
        nlohmann::json j;
        j["m"] = t.m;
        j["state"] = t.state;
        j["action"] = t.action;
        j["forced"] = t.forced;
        j["reward"] = t.reward;
        j["t_ml"] = t.t_ml;
        j["committed"] = t.committed;
        out += j.dump();
        out += '\n';
    }
    return out;
}

const StateRewardScheme& Env::default_scheme() {
    static const DefaultScheme scheme;
    return scheme;
}

Env::Env(const LineConfig& line, const TravelTimeTable& tt, const DemandSet& demand,
         RewardParams params, const StateRewardScheme* scheme,
         const TripForecaster* forecaster)
    : line_(line), tt_(tt), demand_(demand), params_(params),
      scheme_(scheme ? scheme : &default_scheme()), forecaster_(forecaster) {
    static const TripForecaster ground_truth;
    if (!forecaster_) forecaster_ = &ground_truth;
    line_.validate();
    tt_.validate_no_overtake();
    e_m_ = trip_capacity(line_);
    reset();
}

void Env::reset() {
    queues_ = std::make_unique<StationQueues>(demand_, line_);
    minute_ = line_.service_start;
    last_departure_ = line_.service_start;
    any_departure_ = false;
    done_ = false;
    committed_.clear();
    trips_.clear();
    history_.clear();
    state_.clear();
    state_fresh_ = false;
    trace_.clear();
    clamp_log_.clear();
}

int Env::minutes_since_departure() const {
    return any_departure_ ? minute_ - last_departure_ : 0;
}

MinuteTelemetry Env::make_telemetry(int minute) {
    MinuteTelemetry t;
    t.minute = minute;
    t.t_ml = any_departure_ ? minute - last_departure_ : 0;
    t.e_m = e_m_;
    t.line = &line_;

    const bool in_window = minute >= line_.service_start && minute <= line_.service_end;
    const unsigned needs = scheme_->needs();

    if ((needs & kNeedTrip) && in_window)
        t.trip = forecaster_->forecast(*queues_, line_, tt_, minute);
    if ((needs & kNeedUncappedTrip) && in_window) {
        LineConfig uncapped = line_;
        uncapped.capacity = std::numeric_limits<int>::max() / 2;
        t.trip_uncapped = simulate_trip(*queues_, uncapped, tt_, minute, /*commit=*/false);
    }
    if (needs & kNeedStationCounts) {
        const int K = line_.stations;
        t.waiting.assign(static_cast<std::size_t>(K + 1), 0);
        t.arrivals_15min.assign(static_cast<std::size_t>(K + 1), 0);
        for (int k = 1; k <= K - 1; ++k) {
            t.waiting[static_cast<std::size_t>(k)] = queues_->waiting_count(k, minute);
            t.arrivals_15min[static_cast<std::size_t>(k)] =
                queues_->arrivals_within(k, minute, 15.0);
        }
        for (std::size_t i = 0; i < trips_.size(); ++i) {
            const int depart = committed_[i];
            if (minute < depart) continue;
            const double terminus = tt_.arrival_minute(depart, line_.stations);
            if (minute >= terminus) continue;
            // locate the segment this bus is traversing
            for (int k = 1; k <= line_.stations - 1; ++k) {
                const double a0 = tt_.arrival_minute(depart, k);
                const double a1 = tt_.arrival_minute(depart, k + 1);
                if (minute >= a0 && minute < a1) {
                    double frac = a1 > a0 ? (minute - a0) / (a1 - a0) : 1.0;
                    t.road_buses.push_back(MinuteTelemetry::RoadBus{
                        k, frac, trips_[i].onboard_profile[static_cast<std::size_t>(k)]});
                    break;
                }
            }
        }
    }
    return t;
}

void Env::ensure_current() {
    if (state_fresh_) return;
    const int hist = std::max(1, scheme_->history_length());
    if (history_.empty()) {
        // pad leading minutes with empty snapshots
        for (int i = hist - 1; i >= 1; --i) {
            MinuteTelemetry pad;
            pad.minute = minute_ - i;
            pad.e_m = e_m_;
            pad.line = &line_;
            history_.push_back(std::move(pad));
        }
        history_.push_back(make_telemetry(minute_));
    }
    while (static_cast<int>(history_.size()) > hist) history_.pop_front();

    std::vector<const MinuteTelemetry*> view;
    view.reserve(history_.size());
    for (const auto& h : history_) view.push_back(&h);
    state_ = scheme_->state(view, params_, &clamp_log_);
    state_fresh_ = true;
}

const std::vector<double>& Env::observe() {
    ensure_current();
    return state_;
}

StepResult Env::step(int action) {
    if (done_) throw std::logic_error("step after episode end");
    ensure_current();

    const bool forced = minute_ == line_.service_start || minute_ == line_.service_end;
    if (forced) action = 1;
    if (action != 0 && action != 1) throw std::invalid_argument("action must be 0 or 1");

    const MinuteTelemetry& now = history_.back();
    const int t_ml = now.t_ml;
    const double r = scheme_->reward(now, action, params_);

    if (action == 1) {
        TripResult trip = simulate_trip(*queues_, line_, tt_, minute_, /*commit=*/true);
        committed_.push_back(minute_);
        trips_.push_back(std::move(trip));
        last_departure_ = minute_;
        any_departure_ = true;
    }

    const int decided_minute = minute_;
    done_ = (minute_ == line_.service_end);
    minute_ += 1;

    Transition tr;
    tr.s = state_;
    tr.a = action;
    tr.r = r;
    tr.done = done_;

    state_fresh_ = false;
    history_.push_back(make_telemetry(minute_));
    ensure_current();
    tr.s_next = state_;

    trace_.push_back(TraceRecord{decided_minute, tr.s, action, forced, r, t_ml,
                                 static_cast<int>(committed_.size())});
    return StepResult{std::move(tr), forced};
}

Timetable Env::episode_to_timetable() const {
    if (!done_) throw std::logic_error("episode still running");
    Timetable t{committed_};
    validate_timetable_basic(t, line_);
    return t;
}

} // namespace headwayrl
