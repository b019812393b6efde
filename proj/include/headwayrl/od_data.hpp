#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace headwayrl {

enum class Direction { up, down };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

/// One origin-destination trip request. arrival_minute is the minute of day
/// the passenger shows up at their origin station; boarding time is an
/// output of the simulation, never an input.
struct PassengerRecord {
    std::string id;
    double arrival_minute = 0.0; // [0, 1440)
    int origin_station = 0;      // 1-based, < destination
    int destination_station = 0;
};

/// Demand for one direction of one line, sorted by (origin, arrival), ids
/// unique. Immutable by convention once built; transforms return new sets.
struct DemandSet {
    std::vector<PassengerRecord> records;
    std::string line_id;
    Direction direction = Direction::up;
    std::string day_label;

    std::size_t size() const { return records.size(); }
};

/// Sorts, checks per-record invariants and id uniqueness. stations == 0
/// means the station count is unknown (range check deferred to whoever
/// pairs the demand with a line).
DemandSet make_demand_set(std::vector<PassengerRecord> records, std::string line_id = "",
                          Direction dir = Direction::up, std::string day_label = "",
                          int stations = 0);

inline constexpr const char* kDemandCsvSchema = "demand-csv";

/// CSV: header `id,arrival_minute,origin_station,destination_station`.
/// Rows violating invariants are rejected with row-numbered errors.
DemandSet load_demand(const std::filesystem::path& path,
                      const std::string& schema = kDemandCsvSchema, int stations = 0);

std::string demand_to_csv(const DemandSet& d);
void save_demand(const DemandSet& d, const std::filesystem::path& path);

/// Synthetic demand: piecewise-constant arrival-rate curve over the service
/// window plus per-station origin/destination popularity weights.
struct SyntheticDemandSpec {
    int stations = 0;
    long passengers = 0;
    double window_start = 0.0;
    double window_end = 0.0;
    // (minute, relative rate) breakpoints; rate holds until the next breakpoint
    std::vector<std::pair<double, double>> rate_curve;
    std::vector<double> origin_weights;      // per station 1..K (K ignored); empty = uniform
    std::vector<double> destination_weights; // per station 1..K (1 ignored); empty = uniform
    std::string line_id;
    Direction direction = Direction::up;
    std::string day_label;

    static SyntheticDemandSpec from_json_text(const std::string& text);
    static SyntheticDemandSpec from_file(const std::filesystem::path& path);
    std::string to_json_text() const;
};

DemandSet generate_synthetic(const SyntheticDemandSpec& spec, std::uint64_t seed);

/// Records with arrival in [window_start, window_end) get arrival += shift.
DemandSet shift_peak(const DemandSet& demand, double window_start, double window_end,
                     double shift);

/// rate <= 1: keep each record independently with probability rate.
/// rate > 1: keep all, duplicate each with probability rate-1; duplicates
/// get fresh ids and +-2 min uniform arrival jitter.
DemandSet resample(const DemandSet& demand, double rate, std::uint64_t seed);

} // namespace headwayrl
