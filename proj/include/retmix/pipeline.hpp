#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "retmix/density.hpp"
#include "retmix/fitting.hpp"
#include "retmix/models.hpp"
#include "retmix/panel.hpp"

namespace retmix {

enum class DataSource { Synthetic, Quotes, Daily };

struct SynthConfig {
    int tickers = 50;
    int epochs = 25;
    int columnsPerEpoch = 500;
    double factorLoading = 0.3;
    std::string kernel = "gaussian";  // gaussian | algebraic
    double l = 2.6;
    std::string ensemble = "none";  // none | gaussian | algebraic
    double dof = 60.0;              // N
    double shape = 12.0;            // L
};

struct RunConfig {
    DataSource source = DataSource::Synthetic;
    std::uint64_t seed = 0;
    bool seedSet = false;
    std::string outputDir = "out";
    int workers = 0;

    // quotes source
    std::vector<std::string> quoteFiles;
    std::vector<std::string> quoteDates;  // per file, for time-only stamps
    std::string calendarPath;
    double deltaSeconds = 1.0;
    bool includeOvernight = false;

    // daily source
    std::string dailyFile;

    // epochs and intervals
    int epochColumns = 0;  // 0: partition by the panel's natural segments
    int intervalEpochs = 25;
    bool allowRemainder = true;

    // densities and fits
    std::optional<BinningRule> binning;  // unset: default fit binning
    FitConfig fit;
    bool weightedFits = false;
    std::vector<std::string> families = {"GG", "GA", "AG", "AA"};
    std::string overlayFamily = "AA";
    std::string overlayScale = "log";

    static RunConfig fromJsonFile(const std::string& path,
                                  const std::map<std::string, std::string>& overrides = {});
    static RunConfig fromJson(nlohmann::json doc,
                              const std::map<std::string, std::string>& overrides = {});
    nlohmann::json toJson() const;

    SynthConfig synth;

    void validate() const;
};

/// End-to-end pipeline: build/load the panel, fit every epoch on both
/// scales, average, fit the four families per long interval, run the
/// epoch-vs-interval overlay, and write tables, densities, and a manifest
/// (config hash + artifact hashes; no timestamps, so identical runs produce
/// identical trees).
int runPipeline(const RunConfig& config);

/// Build the configured source panel (shared by `run` and the synth CLI).
ReturnPanel acquirePanel(const RunConfig& config);

}  // namespace retmix
