#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

namespace retmix {

struct QuoteTick {
    std::int64_t timestamp = 0;  // epoch seconds
    std::string ticker;
    double bid = 0.0;
    double ask = 0.0;
};

/// Column map for delimited quote data. Columns are located by header name;
/// `defaultDate` supplies the date for time-only timestamps.
struct QuoteSchema {
    std::string timestampColumn = "timestamp";
    std::string tickerColumn = "ticker";
    std::string bidColumn = "bid";
    std::string askColumn = "ask";
    char delimiter = ',';
    std::string defaultDate;
};

struct ParsedQuotes {
    std::vector<QuoteTick> ticks;  // sorted by (ticker, timestamp), stable
    std::int64_t accepted = 0;
    std::int64_t rejected = 0;
    std::vector<std::string> rejectSamples;  // up to a handful of diagnostics
};

ParsedQuotes parseQuotes(std::istream& stream, const QuoteSchema& schema);

struct MidpointSeries {
    std::string ticker;
    std::vector<std::int64_t> times;
    std::vector<double> values;
};

/// Midpoints (bid+ask)/2 per ticker; duplicate timestamps resolved by the
/// last-written quote.
std::vector<MidpointSeries> buildMidpoints(const std::vector<QuoteTick>& ticks);

}  // namespace retmix
