#include "retmix/quotes.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "retmix/calendar.hpp"
#include "retmix/errors.hpp"

namespace retmix {

namespace {

std::vector<std::string> splitLine(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string token;
    for (char ch : line) {
        if (ch == delimiter) {
            fields.push_back(token);
            token.clear();
        } else if (ch != '\r') {
            token.push_back(ch);
        }
    }
    fields.push_back(token);
    return fields;
}

bool parsePrice(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

int findColumn(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

}  // namespace

ParsedQuotes parseQuotes(std::istream& stream, const QuoteSchema& schema) {
    std::string line;
    if (!std::getline(stream, line)) {
        return {};  // empty stream: empty sequence, zero rejects
    }
    const auto header = splitLine(line, schema.delimiter);
    const int tsCol = findColumn(header, schema.timestampColumn);
    const int tickerCol = findColumn(header, schema.tickerColumn);
    const int bidCol = findColumn(header, schema.bidColumn);
    const int askCol = findColumn(header, schema.askColumn);
    if (tsCol < 0 || tickerCol < 0 || bidCol < 0 || askCol < 0) {
        throw ConfigError("quote header '" + line + "' lacks required columns " +
                          schema.timestampColumn + "/" + schema.tickerColumn + "/" +
                          schema.bidColumn + "/" + schema.askColumn);
    }
    const std::size_t needed = static_cast<std::size_t>(
        std::max(std::max(tsCol, tickerCol), std::max(bidCol, askCol))) + 1;

    ParsedQuotes out;
    auto reject = [&](const std::string& why) {
        ++out.rejected;
        if (out.rejectSamples.size() < 5) out.rejectSamples.push_back(why + ": " + line);
    };

    while (std::getline(stream, line)) {
        if (line.empty()) continue;
        const auto fields = splitLine(line, schema.delimiter);
        if (fields.size() < needed) {
            reject("too few columns");
            continue;
        }
        QuoteTick tick;
        try {
            tick.timestamp = parseTimestamp(fields[static_cast<std::size_t>(tsCol)], schema.defaultDate);
        } catch (const DataError&) {
            reject("bad timestamp");
            continue;
        }
        tick.ticker = fields[static_cast<std::size_t>(tickerCol)];
        if (tick.ticker.empty()) {
            reject("empty ticker");
            continue;
        }
        if (!parsePrice(fields[static_cast<std::size_t>(bidCol)], tick.bid) ||
            !parsePrice(fields[static_cast<std::size_t>(askCol)], tick.ask)) {
            reject("bad price");
            continue;
        }
        if (!(tick.bid > 0.0) || !(tick.ask > 0.0)) {
            reject("non-positive price");
            continue;
        }
        if (tick.ask < tick.bid) {
            reject("ask below bid");
            continue;
        }
        out.ticks.push_back(std::move(tick));
        ++out.accepted;
    }

    std::stable_sort(out.ticks.begin(), out.ticks.end(), [](const QuoteTick& a, const QuoteTick& b) {
        if (a.ticker != b.ticker) return a.ticker < b.ticker;
        return a.timestamp < b.timestamp;
    });
    return out;
}

std::vector<MidpointSeries> buildMidpoints(const std::vector<QuoteTick>& ticks) {
    std::vector<MidpointSeries> out;
    for (const auto& tick : ticks) {
        if (out.empty() || out.back().ticker != tick.ticker) {
            out.push_back(MidpointSeries{tick.ticker, {}, {}});
        }
        auto& series = out.back();
        const double mid = 0.5 * (tick.bid + tick.ask);
        if (!series.times.empty() && series.times.back() == tick.timestamp) {
            series.values.back() = mid;  // duplicate timestamp: last written wins
        } else {
            series.times.push_back(tick.timestamp);
            series.values.push_back(mid);
        }
    }
    return out;
}

}  // namespace retmix
