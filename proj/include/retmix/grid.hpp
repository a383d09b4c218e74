#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "retmix/calendar.hpp"
#include "retmix/panel.hpp"
#include "retmix/quotes.hpp"

namespace retmix {

/// Prices sampled on a regular dt grid inside each day's trading windows.
struct PriceGrid {
    std::vector<std::string> tickers;
    std::vector<std::int64_t> times;  // epoch seconds, strictly increasing
    Eigen::MatrixXd prices;           // K x T_g, strictly positive
    double deltaSeconds = 0.0;
    std::string deltaLabel;
    std::vector<std::pair<int, int>> daySegments;  // half-open index ranges per day
    bool degenerateDays = false;  // daily data: boundaries carry no overnight meaning

    int tickerCount() const { return static_cast<int>(prices.rows()); }
    int gridCount() const { return static_cast<int>(prices.cols()); }
};

struct ResampleResult {
    PriceGrid grid;
    std::vector<std::string> droppedTickers;
};

/// Previous-tick sampling of midpoints onto the calendar's dt grid. Tickers
/// with no quote at or before some day's first grid time are dropped so the
/// panel stays complete.
ResampleResult resampleGrid(const std::vector<MidpointSeries>& midpoints,
                            const TradingCalendar& calendar, double deltaSeconds);

/// G_k(t) = ln(m_k(t + dt) / m_k(t)) across consecutive grid points. With
/// includeOvernight=false, pairs straddling a day boundary are skipped; with
/// true they are kept and flagged.
ReturnPanel logReturns(const PriceGrid& grid, bool includeOvernight);

struct DailyLoadResult {
    PriceGrid grid;
    std::vector<std::string> droppedTickers;
    std::int64_t duplicateRows = 0;
    std::int64_t accepted = 0;
    std::int64_t rejected = 0;
};

/// Adapter for daily adjusted-close panels (header date,ticker,adj_close).
/// dt = 1 trading day and day boundaries are degenerate.
DailyLoadResult loadDailyPanel(std::istream& stream);

}  // namespace retmix
