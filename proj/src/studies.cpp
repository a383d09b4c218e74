#include "retmix/studies.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "retmix/errors.hpp"
#include "retmix/rng.hpp"
#include "retmix/rotate.hpp"
#include "retmix/special.hpp"
#include "retmix/spectra.hpp"
#include "retmix/stats.hpp"

namespace retmix {

namespace {

nlohmann::json poolStats(std::span<const double> pool) {
    nlohmann::json out;
    out["samples"] = pool.size();
    out["second_moment"] = secondMoment(pool);
    out["excess_kurtosis"] = excessKurtosis(pool);
    out["ks_to_normal"] = ksStatistic(pool, normalCdf);
    return out;
}

std::vector<double> aggregatedPoolOfSlice(const PanelSlice& slice) {
    const auto norm = normalizeTimeSeries(slice);
    const auto spec = eigendecompose(timeCorrelation(norm));
    return aggregate(rotateReturns(norm, spec));
}

}  // namespace

void StudyReport::write(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir + "/" + kind + ".json");
        if (!out) throw DataError("cannot write study report under " + dir);
        out << summary.dump(2) << "\n";
    }
    if (!densities.empty()) {
        std::filesystem::create_directories(dir + "/densities");
        for (const auto& [name, density] : densities) {
            density.writeCsv(dir + "/densities/" + name + ".csv");
        }
    }
}

StudyReport epochVsIntervalOverlay(const std::vector<FitResult>& epochFits,
                                   const FitResult& intervalFit,
                                   const std::vector<double>& referenceAbscissas) {
    if (epochFits.empty()) throw DataError("overlay study needs at least one epoch fit");
    for (const auto& fit : epochFits) {
        if (fit.deltaLabel != intervalFit.deltaLabel) {
            throw DataError("overlay grids disagree: epoch fit delta '" + fit.deltaLabel +
                            "' vs interval '" + intervalFit.deltaLabel + "'");
        }
        if (fit.scale != intervalFit.scale) throw DataError("overlay fits mix scales");
    }

    const auto intervalModel = intervalFit.model();
    StudyReport report;
    report.kind = "overlay";
    report.summary["epoch_count"] = epochFits.size();
    report.summary["interval_family"] = intervalFit.family;
    report.summary["interval_parameters"] = intervalFit.parameters;

    nlohmann::json perRef = nlohmann::json::array();
    for (double x : referenceAbscissas) {
        const double intervalValue = intervalModel.pdf(x);
        std::size_t intervalExceeds = 0;
        std::size_t epochExceeds = 0;
        for (const auto& fit : epochFits) {
            const double epochValue = fit.model().pdf(x);
            if (intervalValue > epochValue) ++intervalExceeds;
            if (epochValue > intervalValue) ++epochExceeds;
        }
        nlohmann::json entry;
        entry["abscissa"] = x;
        entry["interval_density"] = intervalValue;
        entry["interval_exceeds_fraction"] =
            static_cast<double>(intervalExceeds) / static_cast<double>(epochFits.size());
        entry["epoch_exceeds_fraction"] =
            static_cast<double>(epochExceeds) / static_cast<double>(epochFits.size());
        perRef.push_back(entry);
    }
    report.summary["reference_points"] = perRef;

    // overlay curves on a common grid: interval curve plus the epoch envelope
    std::vector<double> grid;
    for (double x = -10.0; x <= 10.0 + 1e-9; x += 0.05) grid.push_back(x);
    const auto intervalCurve = pdfGrid(intervalModel, grid);
    std::vector<double> lo(grid.size(), std::numeric_limits<double>::infinity());
    std::vector<double> hi(grid.size(), 0.0);
    for (const auto& fit : epochFits) {
        const auto curve = pdfGrid(fit.model(), grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            lo[i] = std::min(lo[i], curve[i]);
            hi[i] = std::max(hi[i], curve[i]);
        }
    }
    nlohmann::json curves;
    curves["x"] = grid;
    curves["interval"] = intervalCurve;
    curves["epoch_min"] = lo;
    curves["epoch_max"] = hi;
    report.summary["curves"] = curves;
    return report;
}

StudyReport intervalLengthComparison(const std::vector<FitResult>& fitsShort,
                                     const std::vector<FitResult>& fitsLong) {
    if (fitsShort.empty() || fitsLong.empty()) {
        throw DataError("interval length comparison needs fits for both lengths");
    }
    const auto summarize = [](const std::vector<FitResult>& fits) {
        nlohmann::json out;
        double meanDof = 0.0;
        double meanShape = 0.0;
        double meanTail = 0.0;
        int shapeCount = 0;
        for (const auto& fit : fits) {
            meanDof += fit.param("N");
            if (fit.parameters.count("L")) {
                meanShape += fit.param("L");
                ++shapeCount;
            }
            meanTail += fit.model().pdf(8.0);
        }
        out["count"] = fits.size();
        out["mean_N"] = meanDof / static_cast<double>(fits.size());
        if (shapeCount > 0) out["mean_L"] = meanShape / shapeCount;
        out["mean_density_at_8"] = meanTail / static_cast<double>(fits.size());
        return out;
    };

    StudyReport report;
    report.kind = "interval-length";
    report.summary["short"] = summarize(fitsShort);
    report.summary["long"] = summarize(fitsLong);
    const double tailShort = report.summary["short"]["mean_density_at_8"].get<double>();
    const double tailLong = report.summary["long"]["mean_density_at_8"].get<double>();
    report.summary["tail_ratio_long_over_short"] = tailShort > 0.0 ? tailLong / tailShort : 0.0;
    report.summary["mean_N_difference_long_minus_short"] =
        report.summary["long"]["mean_N"].get<double>() -
        report.summary["short"]["mean_N"].get<double>();
    return report;
}

StudyReport overnightStudy(const PriceGrid& grid) {
    if (grid.degenerateDays || grid.daySegments.size() < 2) {
        throw DataError("overnight study needs a multi-day intraday grid");
    }
    StudyReport report;
    report.kind = "overnight";

    for (const bool include : {false, true}) {
        const auto panel = logReturns(grid, include);
        const auto norm = normalizeTimeSeries(fullSlice(panel));

        // normalized original returns, lumped across tickers
        std::vector<double> origPool;
        origPool.reserve(static_cast<std::size_t>(norm.rows()) * static_cast<std::size_t>(norm.cols()));
        for (int t = 0; t < norm.cols(); ++t) {
            for (int k = 0; k < norm.rows(); ++k) origPool.push_back(norm.values(k, t));
        }
        const auto spec = eigendecompose(timeCorrelation(norm));
        const auto aggrPool = aggregate(rotateReturns(norm, spec));

        const std::string label = include ? "with-overnight" : "without-overnight";
        nlohmann::json cond;
        cond["columns"] = panel.cols();
        std::int64_t flagged = 0;
        for (char f : panel.boundaryFlags) flagged += f ? 1 : 0;
        cond["boundary_returns"] = flagged;
        cond["original"] = poolStats(origPool);
        cond["aggregated"] = poolStats(aggrPool);
        const auto origDensity = estimateDensity(origPool, defaultFitBinning(origPool), "orig");
        const auto aggrDensity = estimateDensity(aggrPool, defaultFitBinning(aggrPool), "aggr");
        try {
            const auto slopes = tailExponent(aggrDensity);
            cond["aggregated"]["tail_slope_positive"] = slopes.positive;
            cond["aggregated"]["tail_slope_negative"] = slopes.negative;
        } catch (const DataError&) {
            cond["aggregated"]["tail_slope_positive"] = nullptr;
        }
        report.summary[label] = cond;
        report.densities.emplace_back("orig-" + label, origDensity);
        report.densities.emplace_back("aggr-" + label, aggrDensity);
    }
    report.summary["kurtosis_lift"] =
        report.summary["with-overnight"]["aggregated"]["excess_kurtosis"].get<double>() -
        report.summary["without-overnight"]["aggregated"]["excess_kurtosis"].get<double>();
    return report;
}

PairwisePool pairwiseAggregate(const NormalizedPanel& panel, std::int64_t maxPairs,
                               std::uint64_t seed) {
    if (panel.mode != NormalizationMode::TimeSeries) {
        throw DataError("pairwise aggregation expects a time-series normalized panel");
    }
    const int K = panel.rows();
    const int T = panel.cols();
    if (K < 2) throw DataError("pairwise aggregation needs at least two tickers");
    if (T < 2) throw DataError("pairwise aggregation needs at least two columns");

    std::vector<std::pair<int, int>> pairs;
    const std::int64_t total = static_cast<std::int64_t>(K) * (K - 1) / 2;
    if (maxPairs > 0 && maxPairs < total) {
        // seeded subsample of distinct flat pair indices
        Rng rng(deriveSeed(seed, 0x50414952ULL /* "PAIR" */));
        std::set<std::int64_t> chosen;
        while (static_cast<std::int64_t>(chosen.size()) < maxPairs) {
            chosen.insert(static_cast<std::int64_t>(rng.uniform() * static_cast<double>(total)));
        }
        for (const std::int64_t flat : chosen) {
            // invert the row-major upper-triangle index
            std::int64_t rest = flat;
            int i = 0;
            while (rest >= K - 1 - i) {
                rest -= K - 1 - i;
                ++i;
            }
            pairs.emplace_back(i, i + 1 + static_cast<int>(rest));
        }
    } else {
        pairs.reserve(static_cast<std::size_t>(total));
        for (int i = 0; i < K; ++i) {
            for (int j = i + 1; j < K; ++j) pairs.emplace_back(i, j);
        }
    }

    PairwisePool out;
    out.values.reserve(pairs.size() * 2 * static_cast<std::size_t>(T));
    const double invT = 1.0 / static_cast<double>(T);
    for (const auto& [i, j] : pairs) {
        const double rho = panel.values.row(i).dot(panel.values.row(j)) * invT;
        if (std::fabs(rho) >= 1.0 - 1e-12) {
            ++out.pairsSkipped;
            continue;
        }
        // eigenpairs of [[1, rho], [rho, 1]]: (1, 1)/sqrt2 with 1 + rho and
        // (1, -1)/sqrt2 with 1 - rho, matching the global sign convention
        const double scalePlus = 1.0 / std::sqrt(2.0 * (1.0 + rho));
        const double scaleMinus = 1.0 / std::sqrt(2.0 * (1.0 - rho));
        for (int t = 0; t < T; ++t) {
            const double a = panel.values(i, t);
            const double b = panel.values(j, t);
            out.values.push_back((a + b) * scalePlus);
            out.values.push_back((a - b) * scaleMinus);
        }
        ++out.pairsUsed;
    }
    if (out.pairsUsed == 0) throw DataError("all ticker pairs were singular");
    return out;
}

StudyReport epochLengthStudy(const ReturnPanel& panel, const EpochLengthOptions& options) {
    if (options.lengths.empty()) throw ConfigError("epoch length study needs lengths");
    StudyReport report;
    report.kind = "epoch-length";
    const int K = panel.rows();

    nlohmann::json perLength = nlohmann::json::array();
    for (const int length : options.lengths) {
        if (panel.cols() < length) {
            throw DataError("panel has " + std::to_string(panel.cols()) +
                            " columns, shorter than epoch length " + std::to_string(length));
        }
        const auto part = partition(panel, length, 1, /*allowRemainder=*/true);
        // de-meaning leaves rank T - 1, so full-rank aggregation needs T > K
        const bool pairwise = options.forcePairwise || length <= K;

        std::vector<double> origPool;
        std::vector<double> aggrPool;
        std::int64_t skippedEpochs = 0;
        std::int64_t singularPairs = 0;
        for (const auto& slice : part.epochs) {
            if (static_cast<std::int64_t>(origPool.size()) >= options.maxPoolSamples &&
                static_cast<std::int64_t>(aggrPool.size()) >= options.maxPoolSamples) {
                break;
            }
            NormalizedPanel norm;
            try {
                norm = normalizeTimeSeries(slice);
            } catch (const DataError&) {
                ++skippedEpochs;  // constant row inside a tiny epoch
                continue;
            }
            for (int t = 0; t < norm.cols(); ++t) {
                for (int k = 0; k < K; ++k) origPool.push_back(norm.values(k, t));
            }
            if (pairwise) {
                const auto pool = pairwiseAggregate(norm, options.maxPairs, options.seed);
                aggrPool.insert(aggrPool.end(), pool.values.begin(), pool.values.end());
                singularPairs += pool.pairsSkipped;
            } else {
                const auto spec = eigendecompose(timeCorrelation(norm));
                if (!spec.fullRank) {
                    ++skippedEpochs;
                    continue;
                }
                const auto pool = aggregate(rotateReturns(norm, spec));
                aggrPool.insert(aggrPool.end(), pool.begin(), pool.end());
            }
        }
        if (origPool.size() < 100 || aggrPool.size() < 100) {
            throw DataError("epoch length " + std::to_string(length) + " left too few samples");
        }

        nlohmann::json entry;
        entry["length"] = length;
        entry["mode"] = pairwise ? "pairwise" : "full-rank";
        entry["epochs_skipped"] = skippedEpochs;
        entry["singular_pairs"] = singularPairs;
        entry["original"] = poolStats(origPool);
        entry["aggregated"] = poolStats(aggrPool);
        perLength.push_back(entry);

        const std::string suffix = "T" + std::to_string(length);
        report.densities.emplace_back(
            "orig-" + suffix, estimateDensity(origPool, defaultFitBinning(origPool), "orig"));
        report.densities.emplace_back(
            "aggr-" + suffix, estimateDensity(aggrPool, defaultFitBinning(aggrPool), "aggr"));
    }
    report.summary["per_length"] = perLength;
    return report;
}

StudyReport shrinkageStudy(const ReturnPanel& panel, const ShrinkageStudyOptions& options) {
    const auto part = options.epochColumns > 0 ? partition(panel, options.epochColumns, 1, true)
                                               : partitionBySegments(panel, 1);
    StudyReport report;
    report.kind = "shrinkage";

    std::vector<double> ksValues;
    std::int64_t skipped = 0;
    nlohmann::json perEpoch = nlohmann::json::array();
    for (std::size_t e = 0; e < part.epochs.size(); ++e) {
        const auto& slice = part.epochs[e];
        if (slice.cols() < slice.panel->rows()) {
            ++skipped;  // rank-deficient epoch
            continue;
        }
        // both conditions derive their correlation matrix from the same
        // covariance estimate, so a zero shrinkage intensity is an exact no-op
        const auto norm = normalizeTimeSeries(slice);
        const auto meanOnly = meanOnlyNormalize(slice);
        const auto rawSpec = eigendecompose(correlationFromCovariance(covariance(meanOnly)));
        if (!rawSpec.fullRank) {
            ++skipped;
            continue;
        }
        const auto rawPool = aggregate(rotateReturns(norm, rawSpec));

        const auto shrunk = ledoitWolfShrink(meanOnly, options.forcedDelta);
        const auto shrunkSpec = eigendecompose(shrunk.shrunkCorrelation);
        const auto shrunkPool = aggregate(rotateReturns(norm, shrunkSpec));

        const double ks = ksStatisticTwoSample(rawPool, shrunkPool);
        ksValues.push_back(ks);
        nlohmann::json entry;
        entry["epoch"] = e;
        entry["delta"] = shrunk.delta;
        entry["ks"] = ks;
        perEpoch.push_back(entry);
        if (e == 0) {
            report.densities.emplace_back("aggr-raw",
                                          estimateDensity(rawPool, defaultFitBinning(rawPool), "aggr"));
            report.densities.emplace_back(
                "aggr-shrunk", estimateDensity(shrunkPool, defaultFitBinning(shrunkPool), "aggr"));
        }
    }
    if (ksValues.empty()) throw DataError("no full-rank epochs for the shrinkage study");

    std::vector<double> sorted = ksValues;
    std::sort(sorted.begin(), sorted.end());
    report.summary["per_epoch"] = perEpoch;
    report.summary["epochs_used"] = ksValues.size();
    report.summary["epochs_skipped"] = skipped;
    report.summary["median_ks"] = sortedQuantile(sorted, 0.5);
    report.summary["max_ks"] = sorted.back();
    return report;
}

}  // namespace retmix
