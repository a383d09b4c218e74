#include "retmix/panel.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "retmix/errors.hpp"

namespace retmix {

namespace {

void checkPanel(const ReturnPanel& panel) {
    if (panel.rows() < 1 || panel.cols() < 1) throw DataError("empty return panel");
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_string(NormalizationMode mode) {
    switch (mode) {
        case NormalizationMode::TimeSeries: return "time-series";
        case NormalizationMode::PositionSeries: return "position-series";
        case NormalizationMode::MeanOnly: return "mean-only";
    }
    return "?";
}

NormalizationMode normalizationModeFromString(const std::string& s) {
    if (s == "time-series" || s == "time") return NormalizationMode::TimeSeries;
    if (s == "position-series" || s == "position") return NormalizationMode::PositionSeries;
    if (s == "mean-only" || s == "mean") return NormalizationMode::MeanOnly;
    throw ConfigError("unknown normalization mode: " + s);
}

PanelSlice fullSlice(const ReturnPanel& panel) {
    checkPanel(panel);
    return PanelSlice{&panel, 0, panel.cols()};
}

std::string rawSliceId(const PanelSlice& slice) {
    const auto block = slice.block();
    const int rows = static_cast<int>(block.rows());
    std::uint64_t h = fnv1a(&rows, sizeof(rows));
    // column-major panel: the slice is one contiguous run
    h = fnv1a(block.data(), sizeof(double) * static_cast<std::size_t>(block.size()), h);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "slice-%016llx", static_cast<unsigned long long>(h));
    return buf;
}

PanelSlice EpochPartition::intervalSlice(int i) const {
    const auto [first, last] = intervals.at(static_cast<std::size_t>(i));
    PanelSlice s;
    s.panel = epochs[static_cast<std::size_t>(first)].panel;
    s.begin = epochs[static_cast<std::size_t>(first)].begin;
    s.end = epochs[static_cast<std::size_t>(last - 1)].end;
    return s;
}

EpochPartition partition(const ReturnPanel& panel, int epochColumns, int intervalEpochs,
                         bool allowRemainder) {
    checkPanel(panel);
    if (epochColumns < 1) throw ConfigError("epoch length must be positive");
    if (intervalEpochs < 1) throw ConfigError("interval grouping must be positive");
    const int T = panel.cols();
    const int nEpochs = T / epochColumns;
    const int remainder = T % epochColumns;
    if (remainder != 0 && !allowRemainder) {
        std::ostringstream msg;
        msg << "panel columns (" << T << ") not divisible into epochs of " << epochColumns
            << ": remainder " << remainder;
        throw DataError(msg.str());
    }
    if (nEpochs == 0) throw DataError("panel shorter than one epoch");

    EpochPartition part;
    part.intervalEpochs = intervalEpochs;
    part.epochs.reserve(static_cast<std::size_t>(nEpochs));
    for (int e = 0; e < nEpochs; ++e) {
        part.epochs.push_back(PanelSlice{&panel, e * epochColumns, (e + 1) * epochColumns});
    }
    for (int first = 0; first < nEpochs; first += intervalEpochs) {
        part.intervals.emplace_back(first, std::min(first + intervalEpochs, nEpochs));
    }
    return part;
}

EpochPartition partitionBySegments(const ReturnPanel& panel, int intervalEpochs) {
    checkPanel(panel);
    if (panel.segments.empty()) throw DataError("panel has no segment metadata");
    if (intervalEpochs < 1) throw ConfigError("interval grouping must be positive");
    EpochPartition part;
    part.intervalEpochs = intervalEpochs;
    for (const auto& [b, e] : panel.segments) {
        if (e > b) part.epochs.push_back(PanelSlice{&panel, b, e});
    }
    const int nEpochs = static_cast<int>(part.epochs.size());
    for (int first = 0; first < nEpochs; first += intervalEpochs) {
        part.intervals.emplace_back(first, std::min(first + intervalEpochs, nEpochs));
    }
    return part;
}

NormalizedPanel normalizeTimeSeries(const PanelSlice& slice) {
    const auto block = slice.block();
    const int K = static_cast<int>(block.rows());
    const int T = static_cast<int>(block.cols());
    if (T < 2) throw DataError("time-series normalization needs at least 2 columns");

    NormalizedPanel out;
    out.mode = NormalizationMode::TimeSeries;
    out.tickers = slice.panel->tickers;
    out.deltaLabel = slice.panel->deltaLabel;
    out.values.resize(K, T);
    out.rowMeans.resize(static_cast<std::size_t>(K));
    out.rowStds.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const double mu = block.row(k).mean();
        const double var = (block.row(k).array() - mu).square().sum() / T;
        if (var <= 0.0) {
            throw DataError("constant return series for ticker " +
                            (k < static_cast<int>(out.tickers.size()) ? out.tickers[static_cast<std::size_t>(k)]
                                                                       : std::to_string(k)) +
                            ": zero standard deviation on slice");
        }
        const double sd = std::sqrt(var);
        out.rowMeans[static_cast<std::size_t>(k)] = mu;
        out.rowStds[static_cast<std::size_t>(k)] = sd;
        out.values.row(k) = (block.row(k).array() - mu) / sd;
    }
    out.epochRanges = {{0, T}};
    out.sliceId = rawSliceId(slice);
    return out;
}

NormalizedPanel normalizePositions(const PanelSlice& slice) {
    const auto block = slice.block();
    const int K = static_cast<int>(block.rows());
    const int T = static_cast<int>(block.cols());
    if (K < 2) throw DataError("position normalization needs at least 2 rows");

    NormalizedPanel out;
    out.mode = NormalizationMode::PositionSeries;
    out.tickers = slice.panel->tickers;
    out.deltaLabel = slice.panel->deltaLabel;
    out.values.resize(K, T);
    out.colMeans.resize(static_cast<std::size_t>(T));
    out.colStds.resize(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        const double mu = block.col(t).mean();
        const double var = (block.col(t).array() - mu).square().sum() / K;
        if (var <= 0.0) {
            throw DataError("constant return column at index " + std::to_string(slice.begin + t) +
                            ": zero cross-sectional deviation");
        }
        const double sd = std::sqrt(var);
        out.colMeans[static_cast<std::size_t>(t)] = mu;
        out.colStds[static_cast<std::size_t>(t)] = sd;
        out.values.col(t) = (block.col(t).array() - mu) / sd;
    }
    out.epochRanges = {{0, T}};
    out.sliceId = rawSliceId(slice);
    return out;
}

NormalizedPanel meanOnlyNormalize(const PanelSlice& slice) {
    const auto block = slice.block();
    const int K = static_cast<int>(block.rows());
    const int T = static_cast<int>(block.cols());

    NormalizedPanel out;
    out.mode = NormalizationMode::MeanOnly;
    out.tickers = slice.panel->tickers;
    out.deltaLabel = slice.panel->deltaLabel;
    out.values.resize(K, T);
    out.rowMeans.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const double mu = block.row(k).mean();
        out.rowMeans[static_cast<std::size_t>(k)] = mu;
        out.values.row(k) = block.row(k).array() - mu;
    }
    out.epochRanges = {{0, T}};
    out.sliceId = rawSliceId(slice);
    return out;
}

NormalizedPanel concatenateEpochs(const std::vector<NormalizedPanel>& epochs) {
    if (epochs.empty()) throw DataError("no epochs to concatenate");
    const NormalizedPanel& first = epochs.front();
    if (first.mode != NormalizationMode::TimeSeries) {
        throw DataError("epoch concatenation requires time-series normalized epochs");
    }
    int totalCols = 0;
    for (const auto& ep : epochs) {
        if (ep.mode != first.mode) throw DataError("mixed normalization modes in concatenation");
        if (ep.tickers != first.tickers) throw DataError("ticker mismatch in epoch concatenation");
        if (ep.rows() != first.rows()) throw DataError("row-count mismatch in epoch concatenation");
        totalCols += ep.cols();
    }

    NormalizedPanel out;
    out.mode = first.mode;
    out.tickers = first.tickers;
    out.deltaLabel = first.deltaLabel;
    out.values.resize(first.rows(), totalCols);
    int offset = 0;
    for (const auto& ep : epochs) {
        out.values.middleCols(offset, ep.cols()) = ep.values;
        out.epochRanges.emplace_back(offset, offset + ep.cols());
        offset += ep.cols();
    }
    std::uint64_t h = fnv1a("concat", 6);
    for (const auto& ep : epochs) h = fnv1a(ep.sliceId.data(), ep.sliceId.size(), h);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "slice-%016llx", static_cast<unsigned long long>(h));
    out.sliceId = buf;
    return out;
}

}  // namespace retmix
