#include "headwayrl/od_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "headwayrl/rng.hpp"
#include "headwayrl/util.hpp"

namespace headwayrl {

std::string to_string(Direction d) { return d == Direction::up ? "up" : "down"; }

Direction direction_from_string(const std::string& s) {
    if (s == "up") return Direction::up;
    if (s == "down") return Direction::down;
    throw std::invalid_argument("unknown direction: " + s);
}

namespace {

void check_record(const PassengerRecord& r, int stations, const std::string& where) {
    if (!(r.arrival_minute >= 0.0 && r.arrival_minute < 1440.0))
        throw std::invalid_argument(where + ": arrival_minute outside [0, 1440): " +
                                    fmt_double(r.arrival_minute));
    if (r.origin_station < 1)
        throw std::invalid_argument(where + ": origin_station out of range");
    if (r.destination_station <= r.origin_station)
        throw std::invalid_argument(where + ": destination before origin");
    if (stations > 0) {
        if (r.origin_station > stations - 1)
            throw std::invalid_argument(where + ": origin_station out of range");
        if (r.destination_station > stations)
            throw std::invalid_argument(where + ": destination_station out of range");
    }
}

void sort_records(std::vector<PassengerRecord>& recs) {
    std::stable_sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
        if (a.origin_station != b.origin_station) return a.origin_station < b.origin_station;
        return a.arrival_minute < b.arrival_minute;
    });
}

double parse_double_field(const std::string& s, const std::string& where) {
    double v = 0.0;
    auto t = trim(s);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size())
        throw std::invalid_argument(where + ": not a number: '" + t + "'");
    return v;
}

int parse_int_field(const std::string& s, const std::string& where) {
    int v = 0;
    auto t = trim(s);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size())
        throw std::invalid_argument(where + ": not an integer: '" + t + "'");
    return v;
}

} // namespace

DemandSet make_demand_set(std::vector<PassengerRecord> records, std::string line_id,
                          Direction dir, std::string day_label, int stations) {
    std::unordered_set<std::string> ids;
    ids.reserve(records.size());
    for (const auto& r : records) {
        check_record(r, stations, "record " + r.id);
        if (!ids.insert(r.id).second)
            throw std::invalid_argument("duplicate record id: " + r.id);
    }
    sort_records(records);
    return DemandSet{std::move(records), std::move(line_id), dir, std::move(day_label)};
}

DemandSet load_demand(const std::filesystem::path& path, const std::string& schema,
                      int stations) {
    if (schema != kDemandCsvSchema)
        throw std::invalid_argument("unknown demand schema: " + schema);
    std::string text = read_file(path);

    std::vector<PassengerRecord> recs;
    std::size_t pos = 0, row = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? eol : eol - pos);
        pos = eol == std::string::npos ? text.size() : eol + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++row;
        if (trim(line).empty()) continue;
        if (row == 1) {
            if (trim(line) != "id,arrival_minute,origin_station,destination_station")
                throw std::invalid_argument(path.string() + ": bad CSV header: '" + line + "'");
            continue;
        }
        auto fields = split(line, ',');
        std::string where = path.string() + ": row " + fmt_int(static_cast<long long>(row));
        if (fields.size() != 4)
            throw std::invalid_argument(where + ": expected 4 fields, got " +
                                        fmt_int(static_cast<long long>(fields.size())));
        PassengerRecord r;
        r.id = trim(fields[0]);
        if (r.id.empty()) throw std::invalid_argument(where + ": empty id field");
        r.arrival_minute = parse_double_field(fields[1], where + " field arrival_minute");
        r.origin_station = parse_int_field(fields[2], where + " field origin_station");
        r.destination_station = parse_int_field(fields[3], where + " field destination_station");
        check_record(r, stations, where);
        recs.push_back(std::move(r));
    }
    return make_demand_set(std::move(recs), "", Direction::up, "", stations);
}

std::string demand_to_csv(const DemandSet& d) {
    std::string out = "id,arrival_minute,origin_station,destination_station\n";
    for (const auto& r : d.records) {
        out += r.id;
        out += ',';
        out += fmt_double(r.arrival_minute);
        out += ',';
        out += fmt_int(r.origin_station);
        out += ',';
        out += fmt_int(r.destination_station);
        out += '\n';
    }
    return out;
}

void save_demand(const DemandSet& d, const std::filesystem::path& path) {
    atomic_write(path, demand_to_csv(d));
}

SyntheticDemandSpec SyntheticDemandSpec::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SyntheticDemandSpec s;
    s.stations = j.at("stations").get<int>();
    s.passengers = j.at("passengers").get<long>();
    s.window_start = j.at("window_start").get<double>();
    s.window_end = j.at("window_end").get<double>();
    for (const auto& bp : j.at("rate_curve"))
        s.rate_curve.emplace_back(bp.at(0).get<double>(), bp.at(1).get<double>());
    if (j.contains("origin_weights"))
        s.origin_weights = j.at("origin_weights").get<std::vector<double>>();
    if (j.contains("destination_weights"))
        s.destination_weights = j.at("destination_weights").get<std::vector<double>>();
    s.line_id = j.value("line_id", "");
    s.direction = direction_from_string(j.value("direction", "up"));
    s.day_label = j.value("day_label", "");
    return s;
}

SyntheticDemandSpec SyntheticDemandSpec::from_file(const std::filesystem::path& path) {
    return from_json_text(read_file(path));
}

std::string SyntheticDemandSpec::to_json_text() const {
    nlohmann::json j;
    j["stations"] = stations;
    j["passengers"] = passengers;
    j["window_start"] = window_start;
    j["window_end"] = window_end;
    auto& rc = j["rate_curve"] = nlohmann::json::array();
    for (const auto& [m, r] : rate_curve) rc.push_back({m, r});
    if (!origin_weights.empty()) j["origin_weights"] = origin_weights;
    if (!destination_weights.empty()) j["destination_weights"] = destination_weights;
    j["line_id"] = line_id;
    j["direction"] = to_string(direction);
    j["day_label"] = day_label;
    return j.dump(2) + "\n";
}

namespace {

// Inverse-CDF sampler over a piecewise-constant rate curve restricted to
// [window_start, window_end). The first breakpoint's rate extends back to
// the window start.
class RateCurveSampler {
public:
    RateCurveSampler(const SyntheticDemandSpec& spec) {
        const double a = spec.window_start, b = spec.window_end;
        auto curve = spec.rate_curve;
        std::sort(curve.begin(), curve.end());
        if (curve.empty()) curve.emplace_back(a, 1.0);
        for (const auto& [m, r] : curve)
            if (r < 0.0) throw std::invalid_argument("negative rate in rate_curve");

        std::vector<double> bounds{a};
        for (const auto& [m, r] : curve)
            if (m > a && m < b) bounds.push_back(m);
        bounds.push_back(b);

        auto rate_at = [&](double t) {
            double rate = curve.front().second;
            for (const auto& [m, r] : curve)
                if (m <= t) rate = r;
            return rate;
        };

        double cum = 0.0;
        for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
            Segment s{bounds[i], bounds[i + 1], rate_at(bounds[i]), cum};
            cum += s.rate * (s.hi - s.lo);
            segments_.push_back(s);
        }
        total_ = cum;
        if (total_ <= 0.0) throw std::invalid_argument("rate_curve has zero total mass");
    }

    double sample(Rng& rng) const {
        double target = rng.uniform() * total_;
        for (const auto& s : segments_) {
            double mass = s.rate * (s.hi - s.lo);
            if (mass <= 0.0) continue;
            if (target < s.cum + mass)
                return std::clamp(s.lo + (target - s.cum) / s.rate, s.lo,
                                  std::nextafter(s.hi, s.lo));
        }
        // target == total_ up to rounding: land in the last positive segment
        for (auto it = segments_.rbegin(); it != segments_.rend(); ++it)
            if (it->rate > 0.0) return std::nextafter(it->hi, it->lo);
        return segments_.back().lo;
    }

private:
    struct Segment {
        double lo, hi, rate, cum;
    };
    std::vector<Segment> segments_;
    double total_ = 0.0;
};

int sample_weighted(Rng& rng, const std::vector<double>& cumweights) {
    double u = rng.uniform() * cumweights.back();
    auto it = std::upper_bound(cumweights.begin(), cumweights.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cumweights.begin(),
                                                     static_cast<std::ptrdiff_t>(cumweights.size()) - 1));
}

} // namespace

DemandSet generate_synthetic(const SyntheticDemandSpec& spec, std::uint64_t seed) {
    if (spec.stations < 2) throw std::invalid_argument("stations must be >= 2");
    if (!(spec.window_end > spec.window_start))
        throw std::invalid_argument("empty service window");
    if (spec.passengers < 0) throw std::invalid_argument("negative passenger count");
    const int K = spec.stations;
    if (!spec.origin_weights.empty() && static_cast<int>(spec.origin_weights.size()) != K)
        throw std::invalid_argument("origin_weights must have one entry per station");
    if (!spec.destination_weights.empty() &&
        static_cast<int>(spec.destination_weights.size()) != K)
        throw std::invalid_argument("destination_weights must have one entry per station");

    RateCurveSampler curve(spec);
    Rng rng(seed);

    // cumulative origin weights over stations 1..K-1
    std::vector<double> ocum(K - 1);
    double acc = 0.0;
    for (int k = 1; k <= K - 1; ++k) {
        double w = spec.origin_weights.empty() ? 1.0 : spec.origin_weights[k - 1];
        if (w < 0.0) throw std::invalid_argument("negative origin weight");
        acc += w;
        ocum[k - 1] = acc;
    }
    if (acc <= 0.0) throw std::invalid_argument("origin weights sum to zero");

    auto dest_weight = [&](int k) {
        return spec.destination_weights.empty() ? 1.0 : spec.destination_weights[k - 1];
    };

    std::vector<PassengerRecord> recs;
    recs.reserve(static_cast<std::size_t>(spec.passengers));
    for (long i = 0; i < spec.passengers; ++i) {
        PassengerRecord r;
        r.id = "p" + fmt_int(i + 1);
        r.arrival_minute = curve.sample(rng);
        r.origin_station = 1 + sample_weighted(rng, ocum);
        // destinations o+1..K, renormalized
        std::vector<double> dcum;
        dcum.reserve(static_cast<std::size_t>(K - r.origin_station));
        double dacc = 0.0;
        for (int k = r.origin_station + 1; k <= K; ++k) {
            double w = dest_weight(k);
            if (w < 0.0) throw std::invalid_argument("negative destination weight");
            dacc += w;
            dcum.push_back(dacc);
        }
        if (dacc <= 0.0)
            throw std::invalid_argument("destination weights beyond station " +
                                        fmt_int(r.origin_station) + " sum to zero");
        r.destination_station = r.origin_station + 1 + sample_weighted(rng, dcum);
        recs.push_back(std::move(r));
    }
    return make_demand_set(std::move(recs), spec.line_id, spec.direction, spec.day_label,
                           spec.stations);
}

DemandSet shift_peak(const DemandSet& demand, double window_start, double window_end,
                     double shift) {
    if (!(window_start >= 0.0 && window_end <= 1440.0 && window_start < window_end))
        throw std::invalid_argument("shift window must lie inside the day");
    if (window_start + shift < 0.0 || window_end + shift > 1440.0)
        throw std::invalid_argument("shifted window leaves the day");

    std::vector<PassengerRecord> recs = demand.records;
    for (auto& r : recs) {
        if (r.arrival_minute >= window_start && r.arrival_minute < window_end) {
            r.arrival_minute += shift;
            if (r.arrival_minute < 0.0 || r.arrival_minute >= 1440.0)
                throw std::invalid_argument("shift pushes record " + r.id + " outside the day");
        }
    }
    return make_demand_set(std::move(recs), demand.line_id, demand.direction,
                           demand.day_label);
}

DemandSet resample(const DemandSet& demand, double rate, std::uint64_t seed) {
    if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
    Rng rng(seed);
    std::vector<PassengerRecord> recs;

    if (rate <= 1.0) {
        recs.reserve(static_cast<std::size_t>(static_cast<double>(demand.size()) * rate) + 16);
        for (const auto& r : demand.records)
            if (rate >= 1.0 || rng.bernoulli(rate)) recs.push_back(r);
    } else {
        recs.reserve(demand.size() * 2);
        long extra_full = static_cast<long>(std::floor(rate - 1.0));
        double extra_frac = (rate - 1.0) - static_cast<double>(extra_full);
        for (const auto& r : demand.records) {
            recs.push_back(r);
            long copies = extra_full + (rng.bernoulli(extra_frac) ? 1 : 0);
            for (long c = 1; c <= copies; ++c) {
                PassengerRecord dup = r;
                dup.id = r.id + "d" + fmt_int(c);
                double jitter = rng.uniform(-2.0, 2.0);
                dup.arrival_minute =
                    std::clamp(r.arrival_minute + jitter, 0.0, std::nextafter(1440.0, 0.0));
                recs.push_back(std::move(dup));
            }
        }
    }
    return make_demand_set(std::move(recs), demand.line_id, demand.direction,
                           demand.day_label);
}

} // namespace headwayrl
