#include <doctest.h>

#include <cmath>

#include "retmix/errors.hpp"
#include "retmix/panel.hpp"
#include "retmix/rng.hpp"

using namespace retmix;

namespace {

ReturnPanel makePanel(int K, int T, std::uint64_t seed = 1) {
    ReturnPanel panel;
    panel.returns.resize(K, T);
    Rng rng(seed);
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k < K; ++k) panel.returns(k, t) = rng.normal();
    }
    for (int k = 0; k < K; ++k) panel.tickers.push_back("T" + std::to_string(k));
    panel.deltaLabel = "test";
    return panel;
}

}  // namespace

TEST_CASE("time-series normalization matches the hand-computed example") {
    ReturnPanel panel = makePanel(1, 3);
    panel.returns << 1.0, 2.0, 3.0;
    const auto norm = normalizeTimeSeries(fullSlice(panel));
    // population std of {1,2,3} is sqrt(2/3); z-scores are -sqrt(3/2), 0, sqrt(3/2)
    CHECK(norm.values(0, 0) == doctest::Approx(-1.22474487139158905).epsilon(1e-12));
    CHECK(norm.values(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(norm.values(0, 2) == doctest::Approx(1.22474487139158905).epsilon(1e-12));
    CHECK(norm.rowMeans[0] == doctest::Approx(2.0));
    CHECK(norm.rowStds[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("time-series normalization is idempotent and rejects constants") {
    ReturnPanel panel = makePanel(2, 200, 7);
    const auto once = normalizeTimeSeries(fullSlice(panel));
    ReturnPanel again;
    again.tickers = panel.tickers;
    again.returns = once.values;
    const auto twice = normalizeTimeSeries(fullSlice(again));
    CHECK((twice.values - once.values).cwiseAbs().maxCoeff() < 1e-12);

    ReturnPanel flat = makePanel(2, 5);
    flat.returns.row(1).setConstant(5.0);
    CHECK_THROWS_WITH_AS(static_cast<void>(normalizeTimeSeries(fullSlice(flat))),
                         doctest::Contains("T1"), DataError);
}

TEST_CASE("normalization identities hold on random slices") {
    for (std::uint64_t seed : {3ULL, 4ULL, 5ULL}) {
        ReturnPanel panel = makePanel(6, 151, seed);
        const auto norm = normalizeTimeSeries(fullSlice(panel));
        for (int k = 0; k < norm.rows(); ++k) {
            CHECK(std::fabs(norm.values.row(k).mean()) < 1e-12);
            CHECK(std::fabs(norm.values.row(k).squaredNorm() / norm.cols() - 1.0) < 1e-12);
        }
        const auto pos = normalizePositions(fullSlice(panel));
        for (int t = 0; t < pos.cols(); ++t) {
            CHECK(std::fabs(pos.values.col(t).mean()) < 1e-12);
            CHECK(std::fabs(pos.values.col(t).squaredNorm() / pos.rows() - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("position normalization examples") {
    ReturnPanel panel = makePanel(2, 2);
    panel.returns << 1.0, -3.0, 3.0, 3.0;
    const auto pos = normalizePositions(fullSlice(panel));
    CHECK(pos.values(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pos.values(1, 0) == doctest::Approx(1.0).epsilon(1e-12));

    // scale invariance of the z-score: column (-a, a) maps to (-1, 1)
    for (double a : {0.5, 2.0, 100.0}) {
        ReturnPanel p2 = makePanel(2, 2);
        p2.returns << -a, 1.0, a, 2.0;
        const auto n2 = normalizePositions(fullSlice(p2));
        CHECK(n2.values(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(n2.values(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }

    ReturnPanel flat = makePanel(2, 3);
    flat.returns.col(1).setConstant(2.5);
    CHECK_THROWS_WITH_AS(static_cast<void>(normalizePositions(fullSlice(flat))),
                         doctest::Contains("1"), DataError);
}

TEST_CASE("mean-only normalization") {
    ReturnPanel panel = makePanel(1, 3);
    panel.returns << 1.0, 2.0, 3.0;
    const auto norm = meanOnlyNormalize(fullSlice(panel));
    CHECK(norm.values(0, 0) == doctest::Approx(-1.0));
    CHECK(norm.values(0, 1) == doctest::Approx(0.0));
    CHECK(norm.values(0, 2) == doctest::Approx(1.0));

    const ReturnPanel zeroMean = [&] {
        ReturnPanel p = makePanel(1, 4);
        p.returns << -1.0, 1.0, -2.0, 2.0;
        return p;
    }();
    const auto unchanged = meanOnlyNormalize(fullSlice(zeroMean));
    CHECK((unchanged.values - zeroMean.returns).cwiseAbs().maxCoeff() < 1e-15);

    ReturnPanel flat = makePanel(1, 3);
    flat.returns.setConstant(5.0);
    const auto zeros = meanOnlyNormalize(fullSlice(flat));
    CHECK(zeros.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("partition counts intervals like the epoch scheme") {
    ReturnPanel panel = makePanel(2, 250);
    const auto by25 = partition(panel, 1, 25);
    CHECK(by25.epochs.size() == 250);
    CHECK(by25.intervals.size() == 10);
    const auto by50 = partition(panel, 1, 50);
    CHECK(by50.intervals.size() == 5);

    ReturnPanel seven = makePanel(2, 7);
    CHECK_THROWS_WITH_AS(static_cast<void>(partition(seven, 3, 2)), doctest::Contains("remainder 1"),
                         DataError);
    CHECK_NOTHROW(static_cast<void>(partition(seven, 3, 2, true)));
    CHECK(partition(seven, 3, 2, true).epochs.size() == 2);
}

TEST_CASE("interval slices cover consecutive epochs") {
    ReturnPanel panel = makePanel(2, 100);
    const auto part = partition(panel, 10, 5);
    CHECK(part.intervals.size() == 2);
    const auto slice = part.intervalSlice(1);
    CHECK(slice.begin == 50);
    CHECK(slice.end == 100);
}

TEST_CASE("partition by segments honors uneven day lengths") {
    ReturnPanel panel = makePanel(2, 50);
    panel.segments = {{0, 20}, {20, 30}, {30, 50}};
    const auto part = partitionBySegments(panel, 2);
    CHECK(part.epochs.size() == 3);
    CHECK(part.epochs[1].cols() == 10);
    CHECK(part.intervals.size() == 2);
}

TEST_CASE("epoch concatenation preserves order and per-epoch normalization") {
    ReturnPanel panel = makePanel(3, 60, 9);
    const auto part = partition(panel, 20, 3);
    std::vector<NormalizedPanel> eps;
    for (const auto& slice : part.epochs) eps.push_back(normalizeTimeSeries(slice));
    const auto concat = concatenateEpochs(eps);
    CHECK(concat.cols() == 60);
    CHECK(concat.epochRanges.size() == 3);
    for (std::size_t e = 0; e < eps.size(); ++e) {
        const auto [b, en] = concat.epochRanges[e];
        CHECK((concat.values.middleCols(b, en - b) - eps[e].values).cwiseAbs().maxCoeff() == 0.0);
    }
    // single epoch concatenation is the identity
    const auto single = concatenateEpochs({eps[0]});
    CHECK((single.values - eps[0].values).cwiseAbs().maxCoeff() == 0.0);

    // ticker mismatch is rejected
    auto other = eps[1];
    other.tickers[0] = "X";
    CHECK_THROWS_AS(static_cast<void>(concatenateEpochs({eps[0], other})), DataError);
}

TEST_CASE("slice ids identify the underlying raw slice") {
    ReturnPanel panel = makePanel(3, 40, 17);
    const auto part = partition(panel, 20, 2);
    const auto a = normalizeTimeSeries(part.epochs[0]);
    const auto b = meanOnlyNormalize(part.epochs[0]);
    const auto c = normalizeTimeSeries(part.epochs[1]);
    CHECK(a.sliceId == b.sliceId);   // same slice, different normalization
    CHECK(a.sliceId != c.sliceId);   // different slice
}
