#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "retmix/calendar.hpp"
#include "retmix/errors.hpp"
#include "retmix/grid.hpp"
#include "retmix/quotes.hpp"
#include "retmix/rng.hpp"

using namespace retmix;

namespace {

QuoteSchema dated(const std::string& date) {
    QuoteSchema schema;
    schema.defaultDate = date;
    return schema;
}

}  // namespace

TEST_CASE("quote parsing maps fields and counts rejects") {
    std::istringstream in(
        "timestamp,ticker,bid,ask\n"
        "09:41:00,ABC,10.00,10.02\n"
        "09:41:01,ABC,10.03,10.01\n"  // ask < bid -> rejected
        "09:41:02,XYZ,5.00,5.10\n");
    const auto parsed = parseQuotes(in, dated("2014-03-05"));
    REQUIRE(parsed.ticks.size() == 2);
    CHECK(parsed.rejected == 1);
    CHECK(parsed.ticks[0].ticker == "ABC");
    CHECK(parsed.ticks[0].bid == doctest::Approx(10.00));
    CHECK(parsed.ticks[0].ask == doctest::Approx(10.02));
    CHECK(parsed.ticks[0].timestamp == parseDate("2014-03-05") + 9 * 3600 + 41 * 60);
    CHECK(parsed.ticks[1].ticker == "XYZ");
}

TEST_CASE("quote parsing edge cases") {
    std::istringstream empty("");
    const auto none = parseQuotes(empty, dated("2014-01-02"));
    CHECK(none.ticks.empty());
    CHECK(none.rejected == 0);

    std::istringstream badHeader("time,sym,b,a\n09:41:00,ABC,1,2\n");
    CHECK_THROWS_AS(static_cast<void>(parseQuotes(badHeader, dated("2014-01-02"))), ConfigError);

    // ISO timestamps need no default date; sorting is per (ticker, time)
    std::istringstream iso(
        "timestamp,ticker,bid,ask\n"
        "2014-01-03T10:00:00,B,2.0,2.2\n"
        "2014-01-03T09:00:00,B,1.0,1.2\n"
        "2014-01-03T09:30:00,A,3.0,3.2\n");
    const auto parsed = parseQuotes(iso, QuoteSchema{});
    REQUIRE(parsed.ticks.size() == 3);
    CHECK(parsed.ticks[0].ticker == "A");
    CHECK(parsed.ticks[1].timestamp < parsed.ticks[2].timestamp);

    std::istringstream nonpos(
        "timestamp,ticker,bid,ask\n"
        "09:41:00,ABC,-1.0,1.0\n"
        "09:41:01,ABC,0,1.0\n");
    CHECK(parseQuotes(nonpos, dated("2014-01-02")).rejected == 2);
}

TEST_CASE("midpoints from quotes") {
    std::vector<QuoteTick> ticks = {
        {100, "A", 10.0, 12.0},
        {101, "A", 7.0, 7.0},
        {101, "A", 99.98, 100.00},  // duplicate timestamp, last wins
        {50, "B", 99.98, 100.00},
    };
    std::stable_sort(ticks.begin(), ticks.end(), [](const QuoteTick& a, const QuoteTick& b) {
        if (a.ticker != b.ticker) return a.ticker < b.ticker;
        return a.timestamp < b.timestamp;
    });
    const auto series = buildMidpoints(ticks);
    REQUIRE(series.size() == 2);
    CHECK(series[0].ticker == "A");
    CHECK(series[0].values[0] == doctest::Approx(11.0));
    CHECK(series[0].values.size() == 2);
    CHECK(series[0].values[1] == doctest::Approx(99.99));
    CHECK(series[1].values[0] == doctest::Approx(99.99));
}

TEST_CASE("session grid density matches the window arithmetic") {
    const auto cal = TradingCalendar::simple({"2014-01-02"}, "09:40:00", "15:50:00");
    std::vector<MidpointSeries> mids = {{"A", {parseDate("2014-01-02") + parseTimeOfDay("09:39:00")}, {10.0}}};
    const auto oneSecond = resampleGrid(mids, cal, 1.0);
    CHECK(oneSecond.grid.gridCount() == 22200);
    const auto tenSeconds = resampleGrid(mids, cal, 10.0);
    CHECK(tenSeconds.grid.gridCount() == 2220);
    // single quote at the open: previous-tick fill makes the day constant
    CHECK(oneSecond.grid.prices.row(0).minCoeff() == doctest::Approx(10.0));
    CHECK(oneSecond.grid.prices.row(0).maxCoeff() == doctest::Approx(10.0));

    CHECK_THROWS_AS(static_cast<void>(resampleGrid(mids, cal, 7.0)), ConfigError);
}

TEST_CASE("half-day exclusions contribute only the valid portion") {
    TradingCalendar cal = TradingCalendar::simple({"2014-07-03", "2014-07-07"}, "09:40:00", "15:50:00");
    cal.excluded.push_back(ExcludedSegment{"2014-07-03", parseTimeOfDay("13:00:00"),
                                           parseTimeOfDay("15:50:00")});
    std::vector<MidpointSeries> mids = {
        {"A", {parseDate("2014-07-03") + parseTimeOfDay("09:40:00")}, {20.0}}};
    const auto res = resampleGrid(mids, cal, 10.0);
    const int fullDay = 22200 / 10;
    const int halfDay = (parseTimeOfDay("13:00:00") - parseTimeOfDay("09:40:00")) / 10;
    CHECK(res.grid.gridCount() == fullDay + halfDay);
    CHECK(res.grid.daySegments[0].second == halfDay);
}

TEST_CASE("tickers without coverage are dropped with a diagnostic") {
    const auto cal = TradingCalendar::simple({"2014-01-02"}, "09:40:00", "10:40:00");
    const std::int64_t open = parseDate("2014-01-02") + parseTimeOfDay("09:40:00");
    std::vector<MidpointSeries> mids = {
        {"GOOD", {open - 5}, {10.0}},
        {"LATE", {open + 120}, {10.0}},  // first quote after the first grid time
    };
    const auto res = resampleGrid(mids, cal, 60.0);
    CHECK(res.grid.tickers == std::vector<std::string>{"GOOD"});
    CHECK(res.droppedTickers == std::vector<std::string>{"LATE"});
}

TEST_CASE("log returns: values, counting, and the overnight skip rule") {
    const auto cal = TradingCalendar::simple({"2014-01-02", "2014-01-03"}, "10:00:00", "10:03:00");
    const std::int64_t day1 = parseDate("2014-01-02");
    const std::int64_t day2 = parseDate("2014-01-03");
    std::vector<MidpointSeries> mids = {{"A",
                                         {day1 + parseTimeOfDay("09:59:00"),
                                          day1 + parseTimeOfDay("10:01:00"),
                                          day2 + parseTimeOfDay("09:59:30"),
                                          day2 + parseTimeOfDay("10:01:30")},
                                         {100.0, 110.0, 100.0, 100.0}}};
    const auto grid = resampleGrid(mids, cal, 60.0).grid;
    REQUIRE(grid.gridCount() == 6);  // 3 points per day

    const auto noOvernight = logReturns(grid, false);
    CHECK(noOvernight.cols() == 4);  // (3-1) * 2 days
    CHECK(noOvernight.returns(0, 0) == doctest::Approx(std::log(1.1)).epsilon(1e-12));
    CHECK(noOvernight.returns(0, 0) == doctest::Approx(0.0953101798043249).epsilon(1e-10));
    CHECK(noOvernight.returns(0, 1) == doctest::Approx(0.0).epsilon(1e-15));
    for (char f : noOvernight.boundaryFlags) CHECK(f == 0);
    CHECK(noOvernight.segments.size() == 2);
    CHECK(noOvernight.segments[1] == std::pair<int, int>{2, 4});

    const auto withOvernight = logReturns(grid, true);
    CHECK(withOvernight.cols() == 5);
    int flagged = 0;
    for (std::size_t c = 0; c < withOvernight.boundaryFlags.size(); ++c) {
        if (withOvernight.boundaryFlags[c]) {
            ++flagged;
            CHECK(c == 2);  // the close-to-open pair
        }
    }
    CHECK(flagged == 1);
}

TEST_CASE("returns round-trip to prices by cumulative exponentiation") {
    const auto cal = TradingCalendar::simple({"2014-02-03"}, "09:40:00", "10:40:00");
    Rng rng(42);
    std::vector<std::int64_t> qt;
    std::vector<double> qv;
    const std::int64_t open = parseDate("2014-02-03") + parseTimeOfDay("09:40:00");
    double price = 50.0;
    for (int i = 0; i < 600; ++i) {
        qt.push_back(open - 1 + i * 6);
        price *= std::exp(0.001 * rng.normal());
        qv.push_back(price);
    }
    const auto grid = resampleGrid({{"A", qt, qv}}, cal, 30.0).grid;
    const auto panel = logReturns(grid, true);
    double rebuilt = grid.prices(0, 0);
    for (int c = 0; c < panel.cols(); ++c) {
        rebuilt *= std::exp(panel.returns(0, c));
        CHECK(std::fabs(rebuilt - grid.prices(0, c + 1)) < 1e-12 * grid.prices(0, c + 1));
    }
}

TEST_CASE("grid completeness on randomized sparse quote streams") {
    const auto cal = TradingCalendar::simple({"2014-03-03", "2014-03-04"}, "09:40:00", "11:40:00");
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<MidpointSeries> mids;
        for (int k = 0; k < 3; ++k) {
            MidpointSeries s;
            s.ticker = "T" + std::to_string(k);
            for (const auto& day : cal.days) {
                const std::int64_t open = parseDate(day) + cal.openSec;
                // guarantee one quote at the open, then sparse random quotes
                s.times.push_back(open);
                s.values.push_back(10.0 + rng.uniform());
                const int extra = static_cast<int>(rng.uniform() * 5);
                for (int j = 0; j < extra; ++j) {
                    s.times.push_back(open + 1 + static_cast<std::int64_t>(rng.uniform() * 7000));
                    s.values.push_back(10.0 + rng.uniform());
                }
            }
            std::sort(s.times.begin(), s.times.end());
            mids.push_back(std::move(s));
        }
        const auto res = resampleGrid(mids, cal, 60.0);
        CHECK(res.droppedTickers.empty());
        CHECK(res.grid.prices.rows() == 3);
        CHECK((res.grid.prices.array() > 0.0).all());
    }
}

TEST_CASE("daily panel adapter") {
    std::ostringstream data;
    data << "date,ticker,adj_close\n";
    for (int t = 0; t < 10; ++t) {
        const std::string date = "2000-01-" + std::to_string(10 + t);
        data << date << ",AAA," << 100.0 + t << "\n";
        data << date << ",BBB," << 50.0 + t << "\n";
        if (t > 0) data << date << ",GAPPY," << 10.0 + t << "\n";  // misses the first date
    }
    data << "2000-01-12,AAA,999.0\n";  // duplicate: last wins
    std::istringstream in(data.str());
    const auto res = loadDailyPanel(in);
    CHECK(res.grid.tickerCount() == 2);
    CHECK(res.grid.gridCount() == 10);
    CHECK(res.droppedTickers == std::vector<std::string>{"GAPPY"});
    CHECK(res.duplicateRows == 1);
    CHECK(res.grid.prices(0, 2) == doctest::Approx(999.0));
    CHECK(res.grid.degenerateDays);

    // one ticker, prices 100 -> 101: a single daily return ln(1.01)
    std::istringstream tiny("date,ticker,adj_close\n2001-02-01,X,100\n2001-02-02,X,101\n");
    const auto one = loadDailyPanel(tiny);
    const auto panel = logReturns(one.grid, false);
    CHECK(panel.cols() == 1);
    CHECK(panel.returns(0, 0) == doctest::Approx(std::log(1.01)).epsilon(1e-12));
}

TEST_CASE("calendar files round-trip through json") {
    const std::string path = "/tmp/retmix_test_calendar.json";
    {
        std::ofstream out(path);
        out << R"({"session": {"open": "09:40:00", "close": "15:50:00"},
                   "days": ["2014-07-02", "2014-07-03"],
                   "excluded": [{"date": "2014-07-03", "from": "13:00:00", "to": "15:50:00"}]})";
    }
    const auto cal = TradingCalendar::fromJsonFile(path);
    CHECK(cal.days.size() == 2);
    CHECK(cal.openSec == parseTimeOfDay("09:40:00"));
    CHECK(cal.sessionWindows("2014-07-03").size() == 1);
    CHECK(cal.sessionWindows("2014-07-03")[0].second == parseTimeOfDay("13:00:00"));
    CHECK(cal.sessionWindows("2014-07-02")[0] ==
          std::pair<int, int>{parseTimeOfDay("09:40:00"), parseTimeOfDay("15:50:00")});

    TradingCalendar bad = cal;
    bad.excluded[0].date = "2014-07-04";  // not a trading day
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("date helpers") {
    CHECK(formatDate(parseDate("2014-12-24")) == "2014-12-24");
    CHECK(parseDate("1970-01-01") == 0);
    CHECK(parseDate("1970-01-02") == 86400);
    CHECK_THROWS_AS(static_cast<void>(parseDate("not-a-date")), DataError);
    CHECK_THROWS_AS(static_cast<void>(parseTimestamp("99", "")), DataError);
}
