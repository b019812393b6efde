#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "headwayrl/od_data.hpp"

namespace headwayrl {

/// Static description of one direction of a bus line.
struct LineConfig {
    int stations = 0;                  // K >= 2
    int seats = 30;                    // C
    int capacity = 45;                 // C_max >= C
    double comfort_coefficient = 1.5;  // alpha
    int service_start = 0;             // minutes of day
    int service_end = 0;
    int min_interval = 2;              // T_min
    int max_interval = 15;             // T_max
    std::string line_id;
    Direction direction = Direction::up;

    void validate() const;

    static LineConfig from_json_text(const std::string& text);
    static LineConfig from_file(const std::filesystem::path& path);
    std::string to_json_text() const;
};

/// Carrying capacity a single departure provides: alpha * C * (K - 1).
/// Constant over the day under the static-alpha model; keyed by departure
/// minute anyway so a time-varying fleet mix can slot in later.
double trip_capacity(const LineConfig& line, int depart_minute = 0);

/// Piecewise-constant per-segment travel times keyed by the trip's
/// departure minute. Band i applies to departures in
/// [band_start[i], band_start[i+1]).
class TravelTimeTable {
public:
    struct Band {
        double band_start = 0.0;
        std::vector<double> segment_minutes; // K-1 entries, station k -> k+1
    };

    TravelTimeTable(int stations, std::vector<Band> bands);

    /// constant travel time for every segment, all day
    static TravelTimeTable constant(int stations, double minutes_per_segment);

    static TravelTimeTable from_json(const std::string& text, int stations);
    std::string to_json() const;

    int stations() const { return stations_; }
    const std::vector<Band>& bands() const { return bands_; }

    /// t_m^k: minutes from station k to k+1 for a trip departing at m
    double travel_time(double depart_minute, int k) const;

    /// depart_minute plus the prefix sum of segment times up to station k
    double arrival_minute(double depart_minute, int k) const;

    /// FIFO validity: trips departing at integer minutes m < m' must satisfy
    /// arrival(m, k) <= arrival(m', k) for every station. Throws on violation.
    void validate_no_overtake(int day_start = 0, int day_end = 1440) const;

private:
    const Band& band_for(double depart_minute) const;

    int stations_;
    std::vector<Band> bands_;
};

/// One line file carries the LineConfig fields plus the travel-time bands;
/// bands default to a constant 2 minutes per segment when absent.
std::pair<LineConfig, TravelTimeTable> load_line_file(const std::filesystem::path& path);
std::string line_file_json(const LineConfig& line, const TravelTimeTable& tt);

} // namespace headwayrl
