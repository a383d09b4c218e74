#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "retmix/density.hpp"
#include "retmix/fitting.hpp"
#include "retmix/grid.hpp"
#include "retmix/panel.hpp"

namespace retmix {

struct StudyReport {
    std::string kind;
    nlohmann::json summary;
    std::vector<std::pair<std::string, EmpiricalDensity>> densities;

    /// Writes <kind>.json plus densities/<name>.csv under dir.
    void write(const std::string& dir) const;
};

/// Overlay of per-epoch model curves with one long-interval model curve,
/// compared at reference abscissas (ties count as not exceeding).
StudyReport epochVsIntervalOverlay(const std::vector<FitResult>& epochFits,
                                   const FitResult& intervalFit,
                                   const std::vector<double>& referenceAbscissas = {5.0, 8.0});

/// Mean fitted parameters per interval length and the tail-density ratio of
/// the mean model curves at |x| = 8.
StudyReport intervalLengthComparison(const std::vector<FitResult>& fitsShort,
                                     const std::vector<FitResult>& fitsLong);

/// Aggregated and normalized-original densities with and without the
/// day-boundary returns of a multi-day grid; excess kurtosis and tail slopes
/// per condition.
StudyReport overnightStudy(const PriceGrid& grid);

struct PairwisePool {
    std::vector<double> values;
    std::int64_t pairsUsed = 0;
    std::int64_t pairsSkipped = 0;  // |rho| = 1 pairs
};

/// 2x2 aggregation: rotate every ticker pair into the eigenbasis of its
/// 2x2 correlation matrix and pool the rescaled returns. Works when T < K.
/// maxPairs > 0 subsamples the pair list with the seeded generator.
PairwisePool pairwiseAggregate(const NormalizedPanel& panel, std::int64_t maxPairs = 0,
                               std::uint64_t seed = 0);

struct EpochLengthOptions {
    std::vector<int> lengths = {10, 25, 55, 100, 500, 1000, 2000};
    bool forcePairwise = false;   // pairwise mode is mandatory when T < K
    std::int64_t maxPairs = 0;
    std::uint64_t seed = 1;
    std::int64_t maxPoolSamples = 4000000;  // stop pooling epochs beyond this
};

/// Per-epoch-length distributions of pooled normalized returns and pairwise
/// aggregated returns, with excess kurtosis and KS distance to the standard
/// normal per condition.
StudyReport epochLengthStudy(const ReturnPanel& panel, const EpochLengthOptions& options = {});

struct ShrinkageStudyOptions {
    int epochColumns = 0;  // 0: use the panel's natural segments
    std::optional<double> forcedDelta;
};

/// Aggregated pools from raw correlation matrices versus Ledoit-Wolf-shrunk
/// covariance-derived correlation matrices, per epoch; two-sample KS per
/// epoch and the median across epochs.
StudyReport shrinkageStudy(const ReturnPanel& panel, const ShrinkageStudyOptions& options = {});

}  // namespace retmix
