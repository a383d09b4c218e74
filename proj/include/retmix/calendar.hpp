#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace retmix {

/// Civil-date and clock helpers; all timestamps are seconds since the Unix
/// epoch with no timezone handling (exchange-local wall time throughout).
std::int64_t daysFromCivil(int year, int month, int day);
std::int64_t parseDate(const std::string& iso);           // "YYYY-MM-DD" -> epoch seconds at 00:00
int parseTimeOfDay(const std::string& hms);               // "HH:MM:SS" -> seconds since midnight
std::int64_t parseTimestamp(const std::string& text, const std::string& defaultDate);
std::string formatDate(std::int64_t epochSeconds);

struct ExcludedSegment {
    std::string date;  // ISO
    int startSec = 0;  // seconds since midnight
    int endSec = 0;
};

struct TradingCalendar {
    std::vector<std::string> days;  // ordered ISO dates
    int openSec = 0;
    int closeSec = 0;
    std::vector<ExcludedSegment> excluded;

    /// Session pieces of one day (seconds since midnight, half-open) after
    /// removing that day's excluded segments.
    std::vector<std::pair<int, int>> sessionWindows(const std::string& date) const;

    void validate() const;

    static TradingCalendar fromJsonFile(const std::string& path);
    static TradingCalendar simple(std::vector<std::string> days, const std::string& open,
                                  const std::string& close);
};

}  // namespace retmix
