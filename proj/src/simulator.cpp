#include "headwayrl/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "headwayrl/util.hpp"

namespace headwayrl {

StationQueues::StationQueues(const DemandSet& demand, const LineConfig& line)
    : stations_(line.stations), total_(demand.size()) {
    line.validate();
    queues_.resize(static_cast<std::size_t>(stations_));
    heads_.assign(static_cast<std::size_t>(stations_), 0);
    for (std::size_t i = 0; i < demand.records.size(); ++i) {
        const auto& r = demand.records[i];
        if (r.origin_station > stations_ - 1 || r.destination_station > stations_)
            throw std::invalid_argument("demand record " + r.id +
                                        " references stations beyond the line");
        queues_[static_cast<std::size_t>(r.origin_station - 1)].push_back(
            Entry{r.arrival_minute, r.destination_station, i});
    }
    for (auto& q : queues_)
        std::stable_sort(q.begin(), q.end(),
                         [](const Entry& a, const Entry& b) { return a.arrival < b.arrival; });
}

const std::vector<StationQueues::Entry>& StationQueues::entries(int station) const {
    if (station < 1 || station > stations_ - 1)
        throw std::out_of_range("station queue index out of range");
    return queues_[static_cast<std::size_t>(station - 1)];
}

std::size_t StationQueues::head(int station) const {
    return heads_[static_cast<std::size_t>(station - 1)];
}

void StationQueues::set_head(int station, std::size_t h) {
    heads_[static_cast<std::size_t>(station - 1)] = h;
}

long StationQueues::waiting_count(int station, double minute) const {
    const auto& q = entries(station);
    long n = 0;
    for (std::size_t i = head(station); i < q.size() && q[i].arrival <= minute; ++i) ++n;
    return n;
}

long StationQueues::arrivals_within(int station, double minute, double horizon) const {
    const auto& q = entries(station);
    long n = 0;
    for (std::size_t i = head(station); i < q.size(); ++i) {
        if (q[i].arrival <= minute) continue;
        if (q[i].arrival > minute + horizon) break;
        ++n;
    }
    return n;
}

std::size_t StationQueues::boarded_count() const {
    return std::accumulate(heads_.begin(), heads_.end(), std::size_t{0});
}

long TripResult::boardings_total() const {
    return std::accumulate(boardings.begin(), boardings.end(), 0L);
}

long TripResult::alightings_total() const {
    return std::accumulate(alightings.begin(), alightings.end(), 0L);
}

long stranding_total(const TripResult& trip) {
    return std::accumulate(trip.stranded.begin(), trip.stranded.end(), 0L);
}

TripResult simulate_trip(StationQueues& queues, const LineConfig& line,
                         const TravelTimeTable& tt, int depart_minute, bool commit) {
    if (depart_minute < line.service_start || depart_minute > line.service_end)
        throw std::invalid_argument("departure minute " + fmt_int(depart_minute) +
                                    " outside the service window");
    if (queues.stations() != line.stations || tt.stations() != line.stations)
        throw std::invalid_argument("queues/travel table station count mismatch");

    const int K = line.stations;
    const long cap = line.capacity;

    TripResult res;
    res.depart_minute = depart_minute;
    res.boardings.assign(static_cast<std::size_t>(K + 1), 0);
    res.alightings.assign(static_cast<std::size_t>(K + 1), 0);
    res.stranded.assign(static_cast<std::size_t>(K + 1), 0);
    res.onboard_profile.assign(static_cast<std::size_t>(K + 1), 0);

    std::vector<long> onboard_by_dest(static_cast<std::size_t>(K + 1), 0);
    long onboard = 0;

    for (int k = 1; k <= K; ++k) {
        const double arrive = tt.arrival_minute(depart_minute, k);

        // discharge first; alighting is never capacity constrained
        long off = onboard_by_dest[static_cast<std::size_t>(k)];
        res.alightings[static_cast<std::size_t>(k)] = off;
        onboard -= off;
        onboard_by_dest[static_cast<std::size_t>(k)] = 0;

        if (k < K) {
            const auto& q = queues.entries(k);
            std::size_t idx = queues.head(k);
            long boarded = 0;
            while (idx < q.size() && q[idx].arrival <= arrive && onboard < cap) {
                const auto& e = q[idx];
                ++boarded;
                ++onboard;
                ++onboard_by_dest[static_cast<std::size_t>(e.destination)];
                res.waiting_total += arrive - e.arrival;
                res.served.push_back(TripResult::Served{e.record, e.arrival, arrive, k,
                                                        e.destination});
                ++idx;
            }
            // whoever is still eligible was cut off by the capacity limit
            for (std::size_t j = idx; j < q.size() && q[j].arrival <= arrive; ++j)
                ++res.stranded[static_cast<std::size_t>(k)];
            res.boardings[static_cast<std::size_t>(k)] = boarded;
            if (commit) queues.set_head(k, idx);
            res.onboard_profile[static_cast<std::size_t>(k)] = onboard;
        }
    }

    res.max_onboard = *std::max_element(res.onboard_profile.begin(), res.onboard_profile.end());
    res.capacity_used =
        std::accumulate(res.onboard_profile.begin(), res.onboard_profile.end(), 0L);

    // the running-sum and per-passenger readings of consumed capacity agree
    long by_rider = 0;
    for (const auto& s : res.served) by_rider += s.destination - s.origin;
    if (by_rider != res.capacity_used)
        throw std::logic_error("capacity accounting mismatch in simulate_trip");

    return res;
}

void validate_timetable_basic(const Timetable& t, const LineConfig& line) {
    if (t.minutes.empty()) throw std::invalid_argument("timetable is empty");
    for (std::size_t i = 0; i < t.minutes.size(); ++i) {
        if (t.minutes[i] < line.service_start || t.minutes[i] > line.service_end)
            throw std::invalid_argument("departure " + fmt_int(t.minutes[i]) +
                                        " outside the service window");
        if (i > 0 && t.minutes[i] <= t.minutes[i - 1])
            throw std::invalid_argument("departures must be strictly increasing");
    }
}

void validate_timetable_strict(const Timetable& t, const LineConfig& line) {
    validate_timetable_basic(t, line);
    if (t.minutes.front() != line.service_start)
        throw std::invalid_argument("first departure must be the service start");
    if (t.minutes.back() != line.service_end)
        throw std::invalid_argument("last departure must be the service end");
    for (std::size_t i = 1; i < t.minutes.size(); ++i) {
        int gap = t.minutes[i] - t.minutes[i - 1];
        bool final_gap = (i + 1 == t.minutes.size());
        if (gap > line.max_interval)
            throw std::invalid_argument("gap of " + fmt_int(gap) + " exceeds max interval");
        if (gap < line.min_interval && !final_gap)
            throw std::invalid_argument("gap of " + fmt_int(gap) + " below min interval");
    }
}

Timetable load_timetable_csv(const std::filesystem::path& path) {
    std::string text = read_file(path);
    Timetable t;
    std::size_t pos = 0, row = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? eol : eol - pos);
        pos = eol == std::string::npos ? text.size() : eol + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++row;
        auto s = trim(line);
        if (s.empty()) continue;
        if (row == 1) {
            if (s != "depart_minute")
                throw std::invalid_argument(path.string() + ": bad timetable header");
            continue;
        }
        int v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw std::invalid_argument(path.string() + ": row " + fmt_int((long long)row) +
                                        ": not a minute: '" + s + "'");
        t.minutes.push_back(v);
    }
    return t;
}

std::string timetable_to_csv(const Timetable& t) {
    std::string out = "depart_minute\n";
    for (int m : t.minutes) {
        out += fmt_int(m);
        out += '\n';
    }
    return out;
}

void save_timetable(const Timetable& t, const std::filesystem::path& path) {
    atomic_write(path, timetable_to_csv(t));
}

EvalResult evaluate_timetable(const DemandSet& demand, const LineConfig& line,
                              const TravelTimeTable& tt, const Timetable& timetable) {
    validate_timetable_basic(timetable, line);
    tt.validate_no_overtake();

    EvalResult out;
    StationQueues queues(demand, line);

    std::map<int, CapacityBucket> buckets;
    for (int b = (line.service_start / 30) * 30; b <= line.service_end; b += 30)
        buckets[b] = CapacityBucket{b, 0.0, 0};

    for (int m : timetable.minutes) {
        TripResult trip = simulate_trip(queues, line, tt, m, /*commit=*/true);
        out.metrics.nsp += stranding_total(trip);
        out.waiting_total += trip.waiting_total;
        out.served += trip.served.size();

        auto& bucket = buckets[(m / 30) * 30];
        bucket.provided += trip_capacity(line, m);
        bucket.consumed += trip.capacity_used;

        out.trips.push_back(std::move(trip));
    }

    out.metrics.nd = timetable.nd();
    out.metrics.awt = out.served > 0 ? out.waiting_total / static_cast<double>(out.served) : 0.0;
    out.metrics.unserved = static_cast<long>(demand.size()) - static_cast<long>(out.served);
    out.series.reserve(buckets.size());
    for (const auto& [b, cb] : buckets) out.series.push_back(cb);
    return out;
}

std::string metrics_report_json(const EvalResult& r) {
    nlohmann::json j;
    j["nd"] = r.metrics.nd;
    j["awt"] = r.metrics.awt;
    j["nsp"] = r.metrics.nsp;
    j["unserved"] = r.metrics.unserved;
    auto& arr = j["capacity_series"] = nlohmann::json::array();
    for (const auto& b : r.series) {
        nlohmann::json bj;
        bj["minute_bucket"] = b.minute_bucket;
        bj["provided"] = b.provided;
        bj["consumed"] = b.consumed;
        arr.push_back(std::move(bj));
    }
    return j.dump(2) + "\n";
}

std::string capacity_series_csv(const EvalResult& r) {
    std::string out = "minute_bucket,provided,consumed\n";
    for (const auto& b : r.series) {
        out += fmt_int(b.minute_bucket);
        out += ',';
        out += fmt_double(b.provided);
        out += ',';
        out += fmt_int(b.consumed);
        out += '\n';
    }
    return out;
}

} // namespace headwayrl
