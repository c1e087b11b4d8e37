#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "simbank/engine.hpp"
#include "simbank/process.hpp"

namespace simbank {

// All exported timestamps are offsets (in days) from this fixed epoch, so a
// log's byte content depends only on its inputs.
inline constexpr const char* kCsvEpoch = "2024-01-01T00:00:00Z";
inline constexpr std::int64_t kMicrosPerDay = 86'400'000'000LL;

namespace detail {

// Civil-calendar conversions on a proleptic Gregorian calendar.
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

inline std::int64_t epoch_civil_days() {
    static const std::int64_t days = days_from_civil(2024, 1, 1);
    return days;
}

}  // namespace detail

// Day offset -> ISO-8601 with microsecond precision. Quantization to whole
// microseconds is idempotent: formatting, parsing and formatting again yields
// identical bytes.
inline std::string format_timestamp(double days) {
    const auto total_us = static_cast<std::int64_t>(std::llround(days * static_cast<double>(kMicrosPerDay)));
    std::int64_t day = total_us / kMicrosPerDay;
    std::int64_t us = total_us % kMicrosPerDay;
    if (us < 0) {
        us += kMicrosPerDay;
        day -= 1;
    }
    std::int64_t year = 0;
    unsigned month = 0, dom = 0;
    detail::civil_from_days(detail::epoch_civil_days() + day, year, month, dom);
    const auto sec_of_day = static_cast<long>(us / 1'000'000);
    const auto frac = static_cast<long>(us % 1'000'000);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04" PRId64 "-%02u-%02uT%02ld:%02ld:%02ld.%06ldZ", year, month,
                  dom, sec_of_day / 3600, (sec_of_day / 60) % 60, sec_of_day % 60, frac);
    return buf;
}

inline double parse_timestamp(std::string_view iso) {
    int year = 0, month = 0, dom = 0, hh = 0, mm = 0, ss = 0;
    long frac = 0;
    if (std::sscanf(std::string(iso).c_str(), "%d-%d-%dT%d:%d:%d.%6ldZ", &year, &month, &dom, &hh,
                    &mm, &ss, &frac) != 7) {
        throw std::invalid_argument("bad timestamp: " + std::string(iso));
    }
    const std::int64_t day = detail::days_from_civil(year, static_cast<unsigned>(month),
                                                     static_cast<unsigned>(dom)) -
                             detail::epoch_civil_days();
    const std::int64_t us = ((static_cast<std::int64_t>(hh) * 60 + mm) * 60 + ss) * 1'000'000 + frac;
    return static_cast<double>(day * kMicrosPerDay + us) / static_cast<double>(kMicrosPerDay);
}

// One exported row. `cost` is the cumulative case cost at the event, matching
// the attribute schema; rate and discount stay empty until set.
struct LogRecord {
    std::int64_t case_nr = 0;
    ActivityKind activity = ActivityKind::initiate_application;
    double timestamp_days = 0.0;
    double cost = 0.0;
    double amount = 0.0;
    double est_quality = 0.0;
    double unc_quality = 0.0;
    std::optional<double> interest_rate;
    std::optional<double> discount_factor;
    RegimeTag regime_tag = RegimeTag::bank;
    std::optional<double> quality;  // only present when exported with include_hidden
};

inline std::vector<LogRecord> flatten(const EventLog& log, bool include_hidden) {
    std::vector<LogRecord> records;
    for (const auto& trace : log.cases) {
        for (const auto& ev : trace.events) {
            LogRecord r;
            r.case_nr = trace.case_nr;
            r.activity = ev.activity;
            r.timestamp_days = ev.end;
            r.cost = ev.cum_cost;
            r.amount = ev.amount;
            r.est_quality = ev.est_quality;
            r.unc_quality = ev.unc_quality;
            r.interest_rate = ev.interest_rate;
            r.discount_factor = ev.discount_factor;
            r.regime_tag = trace.regime;
            if (include_hidden) r.quality = trace.hidden_quality;
            records.push_back(r);
        }
    }
    return records;
}

namespace detail {

inline std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string fmt6_opt(const std::optional<double>& v) {
    return v ? fmt6(*v) : std::string();
}

}  // namespace detail

inline void write_csv(const std::vector<LogRecord>& records, std::ostream& out, bool include_hidden) {
    out << "case_nr,activity,timestamp,cost,amount,est_quality,unc_quality,interest_rate,"
           "discount_factor,regime_tag";
    if (include_hidden) out << ",quality";
    out << '\n';
    for (const auto& r : records) {
        out << r.case_nr << ',' << to_string(r.activity) << ',' << format_timestamp(r.timestamp_days)
            << ',' << detail::fmt6(r.cost) << ',' << detail::fmt6(r.amount) << ','
            << detail::fmt6(r.est_quality) << ',' << detail::fmt6(r.unc_quality) << ','
            << detail::fmt6_opt(r.interest_rate) << ',' << detail::fmt6_opt(r.discount_factor) << ','
            << to_string(r.regime_tag);
        if (include_hidden) out << ',' << (r.quality ? detail::fmt6(*r.quality) : std::string());
        out << '\n';
    }
}

inline void export_csv(const EventLog& log, const std::string& path, bool include_hidden = false) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_csv(flatten(log, include_hidden), out, include_hidden);
}

inline std::string to_csv_string(const EventLog& log, bool include_hidden = false) {
    std::ostringstream out;
    write_csv(flatten(log, include_hidden), out, include_hidden);
    return out.str();
}

struct ReadLog {
    std::vector<LogRecord> records;
    bool has_hidden = false;
};

inline ReadLog read_csv(std::istream& in) {
    ReadLog out;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string base_header =
        "case_nr,activity,timestamp,cost,amount,est_quality,unc_quality,interest_rate,"
        "discount_factor,regime_tag";
    if (line == base_header) {
        out.has_hidden = false;
    } else if (line == base_header + ",quality") {
        out.has_hidden = true;
    } else {
        throw std::runtime_error("unexpected csv header");
    }
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            fields.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        const std::size_t expected = out.has_hidden ? 11 : 10;
        if (fields.size() != expected) throw std::runtime_error("bad csv row: " + line);
        LogRecord r;
        r.case_nr = std::stoll(fields[0]);
        r.activity = activity_from_string(fields[1]);
        r.timestamp_days = parse_timestamp(fields[2]);
        r.cost = std::stod(fields[3]);
        r.amount = std::stod(fields[4]);
        r.est_quality = std::stod(fields[5]);
        r.unc_quality = std::stod(fields[6]);
        if (!fields[7].empty()) r.interest_rate = std::stod(fields[7]);
        if (!fields[8].empty()) r.discount_factor = std::stod(fields[8]);
        if (fields[9] == "bank") {
            r.regime_tag = RegimeTag::bank;
        } else if (fields[9] == "rct") {
            r.regime_tag = RegimeTag::rct;
        } else {
            throw std::runtime_error("bad regime tag: " + fields[9]);
        }
        if (out.has_hidden && !fields[10].empty()) r.quality = std::stod(fields[10]);
        out.records.push_back(r);
    }
    return out;
}

inline ReadLog read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return read_csv(in);
}

}  // namespace simbank
