#include "headwayrl/line_model.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "headwayrl/util.hpp"

namespace headwayrl {

void LineConfig::validate() const {
    if (stations < 2) throw std::invalid_argument("line: stations must be >= 2");
    if (seats < 1) throw std::invalid_argument("line: seats must be positive");
    if (capacity < seats) throw std::invalid_argument("line: capacity must be >= seats");
    if (!(comfort_coefficient > 0.0))
        throw std::invalid_argument("line: comfort_coefficient must be > 0");
    if (!(service_start < service_end))
        throw std::invalid_argument("line: service_start must precede service_end");
    if (min_interval < 1) throw std::invalid_argument("line: min_interval must be >= 1");
    if (max_interval < min_interval)
        throw std::invalid_argument("line: max_interval must be >= min_interval");
    if (max_interval > service_end - service_start)
        throw std::invalid_argument("line: max_interval exceeds the service window");
    if (service_start < 0 || service_end >= 1440)
        throw std::invalid_argument("line: service window must lie inside the day");
}

LineConfig LineConfig::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    LineConfig c;
    c.stations = j.at("stations").get<int>();
    c.seats = j.value("seats", c.seats);
    c.capacity = j.value("capacity", c.capacity);
    c.comfort_coefficient = j.value("comfort_coefficient", c.comfort_coefficient);
    c.service_start = j.at("service_start").get<int>();
    c.service_end = j.at("service_end").get<int>();
    c.min_interval = j.value("min_interval", c.min_interval);
    c.max_interval = j.value("max_interval", c.max_interval);
    c.line_id = j.value("line_id", "");
    c.direction = direction_from_string(j.value("direction", "up"));
    c.validate();
    return c;
}

LineConfig LineConfig::from_file(const std::filesystem::path& path) {
    return from_json_text(read_file(path));
}

std::string LineConfig::to_json_text() const {
    nlohmann::json j;
    j["stations"] = stations;
    j["seats"] = seats;
    j["capacity"] = capacity;
    j["comfort_coefficient"] = comfort_coefficient;
    j["service_start"] = service_start;
    j["service_end"] = service_end;
    j["min_interval"] = min_interval;
    j["max_interval"] = max_interval;
    j["line_id"] = line_id;
    j["direction"] = to_string(direction);
    return j.dump(2) + "\n";
}

double trip_capacity(const LineConfig& line, int /*depart_minute*/) {
    line.validate();
    return line.comfort_coefficient * static_cast<double>(line.seats) *
           static_cast<double>(line.stations - 1);
}

TravelTimeTable::TravelTimeTable(int stations, std::vector<Band> bands)
    : stations_(stations), bands_(std::move(bands)) {
    if (stations_ < 2) throw std::invalid_argument("travel table: stations must be >= 2");
    if (bands_.empty()) throw std::invalid_argument("travel table: at least one band");
    std::sort(bands_.begin(), bands_.end(),
              [](const Band& a, const Band& b) { return a.band_start < b.band_start; });
    for (std::size_t i = 0; i + 1 < bands_.size(); ++i)
        if (bands_[i].band_start == bands_[i + 1].band_start)
            throw std::invalid_argument("travel table: duplicate band_start");
    for (const auto& b : bands_) {
        if (static_cast<int>(b.segment_minutes.size()) != stations_ - 1)
            throw std::invalid_argument("travel table: band needs K-1 segment times");
        for (double t : b.segment_minutes)
            if (!(t >= 0.0) || !std::isfinite(t))
                throw std::invalid_argument("travel table: segment times must be finite and >= 0");
    }
}

TravelTimeTable TravelTimeTable::constant(int stations, double minutes_per_segment) {
    Band b;
    b.band_start = 0.0;
    b.segment_minutes.assign(static_cast<std::size_t>(stations - 1), minutes_per_segment);
    return TravelTimeTable(stations, {std::move(b)});
}

TravelTimeTable TravelTimeTable::from_json(const std::string& text, int stations) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::vector<Band> bands;
    for (const auto& bj : j.at("travel_time_bands")) {
        Band b;
        b.band_start = bj.at("band_start").get<double>();
        b.segment_minutes = bj.at("segment_minutes").get<std::vector<double>>();
        bands.push_back(std::move(b));
    }
    return TravelTimeTable(stations, std::move(bands));
}

std::string TravelTimeTable::to_json() const {
    nlohmann::json j;
    auto& arr = j["travel_time_bands"] = nlohmann::json::array();
    for (const auto& b : bands_) {
        nlohmann::json bj;
        bj["band_start"] = b.band_start;
        bj["segment_minutes"] = b.segment_minutes;
        arr.push_back(std::move(bj));
    }
    return j.dump(2) + "\n";
}

const TravelTimeTable::Band& TravelTimeTable::band_for(double depart_minute) const {
    const Band* chosen = &bands_.front();
    for (const auto& b : bands_) {
        if (b.band_start <= depart_minute) chosen = &b;
        else break;
    }
    return *chosen;
}

double TravelTimeTable::travel_time(double depart_minute, int k) const {
    if (k < 1 || k > stations_ - 1)
        throw std::out_of_range("travel_time: segment index out of range");
    return band_for(depart_minute).segment_minutes[static_cast<std::size_t>(k - 1)];
}

double TravelTimeTable::arrival_minute(double depart_minute, int k) const {
    if (k < 1 || k > stations_)
        throw std::out_of_range("arrival_minute: station index out of range");
    const Band& b = band_for(depart_minute);
    double t = depart_minute;
    for (int j = 1; j < k; ++j) t += b.segment_minutes[static_cast<std::size_t>(j - 1)];
    return t;
}

std::pair<LineConfig, TravelTimeTable> load_line_file(const std::filesystem::path& path) {
    std::string text = read_file(path);
    LineConfig line = LineConfig::from_json_text(text);
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.contains("travel_time_bands"))
        return {line, TravelTimeTable::from_json(text, line.stations)};
    return {line, TravelTimeTable::constant(line.stations, 2.0)};
}

std::string line_file_json(const LineConfig& line, const TravelTimeTable& tt) {
    nlohmann::json j = nlohmann::json::parse(line.to_json_text());
    nlohmann::json t = nlohmann::json::parse(tt.to_json());
    j["travel_time_bands"] = t["travel_time_bands"];
    return j.dump(2) + "\n";
}

void TravelTimeTable::validate_no_overtake(int day_start, int day_end) const {
    // Departures happen at integer minutes, so adjacent minutes suffice:
    // arrival(m, k) nondecreasing over m follows by transitivity.
    for (int m = day_start; m + 1 < day_end; ++m) {
        const Band& b1 = band_for(m);
        const Band& b2 = band_for(m + 1);
        if (&b1 == &b2) {
            // same prefix sums; arrival differs by exactly +1
            // skip ahead to the next band boundary
            continue;
        }
        double p1 = 0.0, p2 = 0.0;
        for (int k = 2; k <= stations_; ++k) {
            p1 += b1.segment_minutes[static_cast<std::size_t>(k - 2)];
            p2 += b2.segment_minutes[static_cast<std::size_t>(k - 2)];
            if (m + p1 > m + 1 + p2)
                throw std::invalid_argument(
                    "travel table: trips overtake across minute " + fmt_int(m) +
                    " at station " + fmt_int(k));
        }
    }
}

} // namespace headwayrl
