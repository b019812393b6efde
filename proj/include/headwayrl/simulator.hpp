#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "headwayrl/line_model.hpp"
#include "headwayrl/od_data.hpp"

namespace headwayrl {

/// Per-station FIFO queues over a fixed DemandSet. Entries are ordered by
/// arrival minute; `head` marks the first passenger not yet boarded, so a
/// committed boarding consumes a prefix and stranded passengers stay put.
/// Future arrivals sit in the queue with t_a beyond the current clock and
/// become visible to a trip only once its station arrival time passes them
/// (this is what gives lookahead trips their ground-truth forecast).
class StationQueues {
public:
    struct Entry {
        double arrival;
        int destination;
        std::size_t record; // index into the DemandSet
    };

    StationQueues(const DemandSet& demand, const LineConfig& line);

    int stations() const { return stations_; }
    std::size_t total_passengers() const { return total_; }

    const std::vector<Entry>& entries(int station) const;
    std::size_t head(int station) const;
    void set_head(int station, std::size_t h);

    /// passengers at `station` with arrival <= minute, not yet boarded
    long waiting_count(int station, double minute) const;
    /// arrivals at `station` with minute < t_a <= minute + horizon
    long arrivals_within(int station, double minute, double horizon) const;

    std::size_t boarded_count() const;

private:
    int stations_;
    std::size_t total_;
    std::vector<std::vector<Entry>> queues_; // index 1..K-1
    std::vector<std::size_t> heads_;
};

/// Outcome of one trip: boardings/alightings/stranding per station, the
/// onboard profile per segment, total waiting of its boarders and the
/// capacity it consumed.
struct TripResult {
    int depart_minute = 0;
    std::vector<long> boardings;       // index 1..K
    std::vector<long> alightings;      // index 1..K
    std::vector<long> stranded;        // index 1..K-1 (ds_mk)
    std::vector<long> onboard_profile; // [k] = on board leaving station k, 1..K-1
    long max_onboard = 0;
    double waiting_total = 0.0;
    long capacity_used = 0; // passenger-segments ridden

    struct Served {
        std::size_t record;
        double arrival;  // t_a
        double boarding; // t_b
        int origin;
        int destination;
    };
    std::vector<Served> served;

    long boardings_total() const;
    long alightings_total() const;
};

/// ds_m: stranding events of this trip summed over stations.
long stranding_total(const TripResult& trip);

/// Run one bus over the line. Stations are visited at the travel-table
/// arrival times; alighting happens before boarding; boarding is FIFO over
/// passengers with t_a <= the bus arrival, cut off at capacity. Passengers
/// cut off are counted as stranded. With commit=false the queues are left
/// untouched (pure lookahead).
TripResult simulate_trip(StationQueues& queues, const LineConfig& line,
                         const TravelTimeTable& tt, int depart_minute, bool commit);

/// Ordered departure minutes. Validity is two-tier: `basic` (sorted,
/// strictly increasing, inside the service window) is what evaluation
/// requires; `strict` additionally pins both endpoints and the
/// [T_min, T_max] gap band, exempting only the final gap's T_min bound.
struct Timetable {
    std::vector<int> minutes;

    int nd() const { return static_cast<int>(minutes.size()); }
};

void validate_timetable_basic(const Timetable& t, const LineConfig& line);
void validate_timetable_strict(const Timetable& t, const LineConfig& line);

Timetable load_timetable_csv(const std::filesystem::path& path);
std::string timetable_to_csv(const Timetable& t);
void save_timetable(const Timetable& t, const std::filesystem::path& path);

struct Metrics {
    int nd = 0;
    double awt = 0.0;
    long nsp = 0;
    long unserved = 0;
};

struct CapacityBucket {
    int minute_bucket = 0;
    double provided = 0.0;
    long consumed = 0;
};

struct EvalResult {
    Metrics metrics;
    std::vector<TripResult> trips;
    std::vector<CapacityBucket> series; // half-hour buckets over the window
    double waiting_total = 0.0;
    std::size_t served = 0;
};

/// Simulate the whole timetable against fresh queues, committing each trip
/// in departure order, and aggregate the ND/AWT/NSP metrics plus the
/// half-hour provided/consumed capacity series.
EvalResult evaluate_timetable(const DemandSet& demand, const LineConfig& line,
                              const TravelTimeTable& tt, const Timetable& timetable);

std::string metrics_report_json(const EvalResult& r);
std::string capacity_series_csv(const EvalResult& r);

} // namespace headwayrl
