#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace retmix {

/// K x T log-return matrix. `segments` are the natural contiguous column
/// blocks (trading days for ingested data, generator epochs for synthetic
/// data); `boundaryFlags[t]` marks returns that straddle a day boundary
/// (only present when overnight returns were kept).
struct ReturnPanel {
    std::vector<std::string> tickers;
    Eigen::MatrixXd returns;
    double deltaSeconds = 0.0;
    std::string deltaLabel;
    std::vector<std::pair<int, int>> segments;
    std::vector<char> boundaryFlags;

    int rows() const { return static_cast<int>(returns.rows()); }
    int cols() const { return static_cast<int>(returns.cols()); }
};

enum class NormalizationMode { TimeSeries, PositionSeries, MeanOnly };

std::string to_string(NormalizationMode mode);
NormalizationMode normalizationModeFromString(const std::string& s);

/// A contiguous column range of a panel. The id is content-derived so that
/// downstream components can verify that returns and correlation bases come
/// from the same slice.
struct PanelSlice {
    const ReturnPanel* panel = nullptr;
    int begin = 0;
    int end = 0;

    Eigen::Ref<const Eigen::MatrixXd> block() const {
        return panel->returns.middleCols(begin, end - begin);
    }
    int cols() const { return end - begin; }
};

PanelSlice fullSlice(const ReturnPanel& panel);

/// Content-derived id of a raw slice. All normalizations of one slice share
/// it, so a decomposition can be matched against any compatible view of the
/// same underlying returns.
std::string rawSliceId(const PanelSlice& slice);

struct NormalizedPanel {
    Eigen::MatrixXd values;
    NormalizationMode mode = NormalizationMode::TimeSeries;
    std::vector<std::string> tickers;
    std::string sliceId;
    std::string deltaLabel;
    // Normalization constants retained for audit.
    std::vector<double> rowMeans, rowStds;
    std::vector<double> colMeans, colStds;
    // Column ranges of the constituent epochs (singleton for a plain slice).
    std::vector<std::pair<int, int>> epochRanges;

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
};

struct EpochPartition {
    std::vector<PanelSlice> epochs;
    int intervalEpochs = 0;
    // Half-open epoch-index ranges forming the long intervals.
    std::vector<std::pair<int, int>> intervals;

    /// Contiguous column slice covering interval i.
    PanelSlice intervalSlice(int i) const;
};

/// Uniform partition into epochs of `epochColumns` columns, grouped into
/// long intervals of `intervalEpochs` epochs. A trailing remainder is an
/// error unless `allowRemainder`; a trailing partial interval is kept.
EpochPartition partition(const ReturnPanel& panel, int epochColumns, int intervalEpochs,
                         bool allowRemainder = false);

/// Partition aligned to the panel's natural segments (days or generator
/// epochs); epoch lengths may differ when segments do.
EpochPartition partitionBySegments(const ReturnPanel& panel, int intervalEpochs);

NormalizedPanel normalizeTimeSeries(const PanelSlice& slice);
NormalizedPanel normalizePositions(const PanelSlice& slice);
NormalizedPanel meanOnlyNormalize(const PanelSlice& slice);

/// Concatenate per-epoch normalized panels into a long-interval panel.
/// No re-normalization happens; per-epoch zero mean / unit variance is kept.
NormalizedPanel concatenateEpochs(const std::vector<NormalizedPanel>& epochs);

/// FNV-1a over raw bytes; used for content-derived ids and manifests.
std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace retmix
