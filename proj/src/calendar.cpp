#include "retmix/calendar.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "retmix/errors.hpp"

namespace retmix {

std::int64_t daysFromCivil(int year, int month, int day) {
    // Howard Hinnant's algorithm
    year -= month <= 2;
    const std::int64_t era = (year >= 0 ? year : year - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(year - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::int64_t parseDate(const std::string& iso) {
    int y = 0;
    int m = 0;
    int d = 0;
    if (std::sscanf(iso.c_str(), "%d-%d-%d", &y, &m, &d) != 3 || m < 1 || m > 12 || d < 1 || d > 31) {
        throw DataError("unparseable date: " + iso);
    }
    return daysFromCivil(y, m, d) * 86400;
}

int parseTimeOfDay(const std::string& hms) {
    int h = 0;
    int m = 0;
    int s = 0;
    const int got = std::sscanf(hms.c_str(), "%d:%d:%d", &h, &m, &s);
    if (got < 2 || h < 0 || h > 23 || m < 0 || m > 59 || s < 0 || s > 60) {
        throw DataError("unparseable time of day: " + hms);
    }
    return h * 3600 + m * 60 + s;
}

std::int64_t parseTimestamp(const std::string& text, const std::string& defaultDate) {
    const auto sep = text.find_first_of("T ");
    if (text.find('-') != std::string::npos && sep != std::string::npos) {
        return parseDate(text.substr(0, sep)) + parseTimeOfDay(text.substr(sep + 1));
    }
    if (text.find(':') != std::string::npos) {
        if (defaultDate.empty()) {
            throw DataError("time-only timestamp '" + text + "' needs a date supplied per file");
        }
        return parseDate(defaultDate) + parseTimeOfDay(text);
    }
    throw DataError("unparseable timestamp: " + text);
}

std::string formatDate(std::int64_t epochSeconds) {
    // inverse of daysFromCivil
    std::int64_t z = epochSeconds / 86400 + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u",
                  static_cast<long long>(y + (m <= 2 ? 1 : 0)), m, d);
    return buf;
}

std::vector<std::pair<int, int>> TradingCalendar::sessionWindows(const std::string& date) const {
    std::vector<std::pair<int, int>> windows = {{openSec, closeSec}};
    for (const auto& seg : excluded) {
        if (seg.date != date) continue;
        std::vector<std::pair<int, int>> next;
        for (const auto& [lo, hi] : windows) {
            if (seg.endSec <= lo || seg.startSec >= hi) {
                next.emplace_back(lo, hi);
                continue;
            }
            if (seg.startSec > lo) next.emplace_back(lo, seg.startSec);
            if (seg.endSec < hi) next.emplace_back(seg.endSec, hi);
        }
        windows = std::move(next);
    }
    return windows;
}

void TradingCalendar::validate() const {
    if (days.empty()) throw ConfigError("calendar has no trading days");
    if (openSec >= closeSec) throw ConfigError("calendar session window start must precede end");
    for (std::size_t i = 1; i < days.size(); ++i) {
        if (parseDate(days[i - 1]) >= parseDate(days[i])) {
            throw ConfigError("calendar days out of order at " + days[i]);
        }
    }
    for (const auto& seg : excluded) {
        if (std::find(days.begin(), days.end(), seg.date) == days.end()) {
            throw ConfigError("excluded segment on non-trading day " + seg.date);
        }
        if (seg.startSec < openSec || seg.endSec > closeSec || seg.startSec >= seg.endSec) {
            throw ConfigError("excluded segment outside session window on " + seg.date);
        }
    }
}

TradingCalendar TradingCalendar::fromJsonFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open calendar file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed calendar file " + path + ": " + e.what());
    }
    TradingCalendar cal;
    try {
        cal.openSec = parseTimeOfDay(doc.at("session").at("open").get<std::string>());
        cal.closeSec = parseTimeOfDay(doc.at("session").at("close").get<std::string>());
        for (const auto& d : doc.at("days")) cal.days.push_back(d.get<std::string>());
        if (doc.contains("excluded")) {
            for (const auto& seg : doc.at("excluded")) {
                cal.excluded.push_back(ExcludedSegment{
                    seg.at("date").get<std::string>(),
                    parseTimeOfDay(seg.at("from").get<std::string>()),
                    parseTimeOfDay(seg.at("to").get<std::string>())});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("calendar file " + path + " missing fields: " + e.what());
    }
    cal.validate();
    return cal;
}

TradingCalendar TradingCalendar::simple(std::vector<std::string> days, const std::string& open,
                                        const std::string& close) {
    TradingCalendar cal;
    cal.days = std::move(days);
    cal.openSec = parseTimeOfDay(open);
    cal.closeSec = parseTimeOfDay(close);
    cal.validate();
    return cal;
}

}  // namespace retmix
