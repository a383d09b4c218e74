#include "retmix/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "retmix/errors.hpp"

namespace retmix {

ResampleResult resampleGrid(const std::vector<MidpointSeries>& midpoints,
                            const TradingCalendar& calendar, double deltaSeconds) {
    calendar.validate();
    if (deltaSeconds <= 0.0) throw ConfigError("delta t must be positive");
    const auto dt = static_cast<std::int64_t>(deltaSeconds);
    if (static_cast<double>(dt) != deltaSeconds) {
        throw ConfigError("delta t must be a whole number of seconds");
    }

    // Build grid times; each window contributes windowSeconds / dt points.
    std::vector<std::int64_t> times;
    std::vector<std::pair<int, int>> daySegments;
    for (const auto& day : calendar.days) {
        const std::int64_t midnight = parseDate(day);
        const int dayStart = static_cast<int>(times.size());
        for (const auto& [lo, hi] : calendar.sessionWindows(day)) {
            const std::int64_t span = hi - lo;
            if (span % dt != 0) {
                std::ostringstream msg;
                msg << "delta t " << dt << " s does not divide the " << span
                    << " s session window on " << day;
                throw ConfigError(msg.str());
            }
            for (std::int64_t s = lo; s < hi; s += dt) times.push_back(midnight + s);
        }
        daySegments.emplace_back(dayStart, static_cast<int>(times.size()));
    }
    if (times.empty()) throw DataError("calendar produced an empty grid");

    ResampleResult out;
    out.grid.times = times;
    out.grid.deltaSeconds = deltaSeconds;
    out.grid.daySegments = daySegments;
    {
        std::ostringstream label;
        label << dt << "s";
        out.grid.deltaLabel = label.str();
    }

    const int T = static_cast<int>(times.size());
    std::vector<const MidpointSeries*> kept;
    std::vector<std::vector<double>> rows;
    for (const auto& series : midpoints) {
        if (series.times.empty()) {
            out.droppedTickers.push_back(series.ticker);
            continue;
        }
        std::vector<double> row(static_cast<std::size_t>(T));
        std::size_t q = 0;  // index of next quote not yet consumed
        bool dropped = false;
        for (int i = 0; i < T && !dropped; ++i) {
            while (q < series.times.size() && series.times[q] <= times[static_cast<std::size_t>(i)]) ++q;
            if (q == 0) {
                // no quote at or before this grid time; only acceptable if
                // this is not the first grid point of a day
                dropped = true;
                break;
            }
            row[static_cast<std::size_t>(i)] = series.values[q - 1];
        }
        if (dropped) {
            out.droppedTickers.push_back(series.ticker);
            continue;
        }
        kept.push_back(&series);
        rows.push_back(std::move(row));
    }
    if (kept.empty()) throw DataError("no ticker has coverage from the first grid time onward");

    out.grid.prices.resize(static_cast<int>(kept.size()), T);
    for (std::size_t k = 0; k < kept.size(); ++k) {
        out.grid.tickers.push_back(kept[k]->ticker);
        for (int i = 0; i < T; ++i) out.grid.prices(static_cast<int>(k), i) = rows[k][static_cast<std::size_t>(i)];
    }
    return out;
}

ReturnPanel logReturns(const PriceGrid& grid, bool includeOvernight) {
    if (grid.gridCount() < 2) throw DataError("grid too short for returns");
    if ((grid.prices.array() <= 0.0).any()) {
        throw NumericalError("non-positive price in grid: invariant breach upstream");
    }

    // day index per grid column (degenerate daily grids count as one block)
    std::vector<int> dayOf(static_cast<std::size_t>(grid.gridCount()), 0);
    if (!grid.degenerateDays) {
        for (std::size_t d = 0; d < grid.daySegments.size(); ++d) {
            for (int i = grid.daySegments[d].first; i < grid.daySegments[d].second; ++i) {
                dayOf[static_cast<std::size_t>(i)] = static_cast<int>(d);
            }
        }
    }

    ReturnPanel panel;
    panel.tickers = grid.tickers;
    panel.deltaSeconds = grid.deltaSeconds;
    panel.deltaLabel = grid.deltaLabel;

    std::vector<int> sourceIndex;  // grid index t of each return column
    std::vector<char> flags;
    for (int t = 0; t + 1 < grid.gridCount(); ++t) {
        const bool boundary = dayOf[static_cast<std::size_t>(t)] != dayOf[static_cast<std::size_t>(t + 1)];
        if (boundary && !includeOvernight) continue;
        sourceIndex.push_back(t);
        flags.push_back(boundary ? 1 : 0);
    }
    if (sourceIndex.empty()) throw DataError("no returns after overnight exclusion");

    const int K = grid.tickerCount();
    const int T = static_cast<int>(sourceIndex.size());
    panel.returns.resize(K, T);
    for (int c = 0; c < T; ++c) {
        const int t = sourceIndex[static_cast<std::size_t>(c)];
        panel.returns.col(c) =
            (grid.prices.col(t + 1).array() / grid.prices.col(t).array()).log().matrix();
    }
    panel.boundaryFlags = flags;

    // return-column ranges per day; a kept boundary return opens its day
    if (grid.degenerateDays || grid.daySegments.size() <= 1) {
        panel.segments = {{0, T}};
    } else {
        int col = 0;
        for (std::size_t d = 0; d < grid.daySegments.size(); ++d) {
            const int begin = col;
            while (col < T) {
                const int t = sourceIndex[static_cast<std::size_t>(col)];
                const int day = dayOf[static_cast<std::size_t>(t)];
                if (static_cast<std::size_t>(day) != d) break;
                ++col;
            }
            panel.segments.emplace_back(begin, col);
        }
    }
    return panel;
}

DailyLoadResult loadDailyPanel(std::istream& stream) {
    std::string line;
    if (!std::getline(stream, line)) throw DataError("empty daily panel stream");
    {
        std::istringstream header(line);
        std::string c0, c1, c2;
        std::getline(header, c0, ',');
        std::getline(header, c1, ',');
        std::getline(header, c2, ',');
        if (c0 != "date" || c1 != "ticker") {
            throw ConfigError("daily panel header must be date,ticker,adj_close; got '" + line + "'");
        }
    }

    DailyLoadResult out;
    std::set<std::string> dates;
    std::map<std::string, std::map<std::string, double>> byTicker;
    while (std::getline(stream, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string date, ticker, priceText;
        if (!std::getline(row, date, ',') || !std::getline(row, ticker, ',') ||
            !std::getline(row, priceText, ',')) {
            ++out.rejected;
            continue;
        }
        double price = 0.0;
        try {
            price = std::stod(priceText);
            static_cast<void>(parseDate(date));
        } catch (...) {
            ++out.rejected;
            continue;
        }
        if (!(price > 0.0) || !std::isfinite(price)) {
            ++out.rejected;
            continue;
        }
        auto& series = byTicker[ticker];
        if (auto it = series.find(date); it != series.end()) {
            it->second = price;  // last value wins
            ++out.duplicateRows;
        } else {
            series.emplace(date, price);
        }
        dates.insert(date);
        ++out.accepted;
    }
    if (dates.empty()) throw DataError("daily panel has no rows");

    std::vector<std::string> orderedDates(dates.begin(), dates.end());
    std::sort(orderedDates.begin(), orderedDates.end(),
              [](const std::string& a, const std::string& b) { return parseDate(a) < parseDate(b); });

    for (auto& [ticker, series] : byTicker) {
        if (series.size() == orderedDates.size()) {
            out.grid.tickers.push_back(ticker);
        } else {
            out.droppedTickers.push_back(ticker);
        }
    }
    if (out.grid.tickers.empty()) throw DataError("no ticker covers every date in the daily panel");

    const int K = static_cast<int>(out.grid.tickers.size());
    const int T = static_cast<int>(orderedDates.size());
    out.grid.prices.resize(K, T);
    for (int t = 0; t < T; ++t) {
        out.grid.times.push_back(parseDate(orderedDates[static_cast<std::size_t>(t)]));
        for (int k = 0; k < K; ++k) {
            out.grid.prices(k, t) = byTicker[out.grid.tickers[static_cast<std::size_t>(k)]]
                                        [orderedDates[static_cast<std::size_t>(t)]];
        }
    }
    out.grid.deltaSeconds = 86400.0;
    out.grid.deltaLabel = "1d";
    out.grid.degenerateDays = true;
    for (int t = 0; t < T; ++t) out.grid.daySegments.emplace_back(t, t + 1);
    return out;
}

}  // namespace retmix
