#include "retmix/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "retmix/calendar.hpp"
#include "retmix/errors.hpp"
#include "retmix/grid.hpp"
#include "retmix/parallel.hpp"
#include "retmix/quotes.hpp"
#include "retmix/rotate.hpp"
#include "retmix/spectra.hpp"
#include "retmix/studies.hpp"

namespace retmix {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string formatDouble(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw DataError("cannot open " + path + " for writing");
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError("stage " + name + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError("stage " + name + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError("stage " + name + ": " + e.what());
    }
}

}  // namespace

RunConfig RunConfig::fromJsonFile(const std::string& path,
                                  const std::map<std::string, std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config " + path + ": " + e.what());
    }
    return fromJson(std::move(doc), overrides);
}

RunConfig RunConfig::fromJson(nlohmann::json doc,
                              const std::map<std::string, std::string>& overrides) {
    for (const auto& [key, value] : overrides) {
        std::string pointer = "/" + key;
        for (auto& ch : pointer) {
            if (ch == '.') ch = '/';
        }
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(value);
        } catch (const nlohmann::json::exception&) {
            parsed = value;  // plain string
        }
        doc[nlohmann::json::json_pointer(pointer)] = parsed;
    }

    RunConfig config;
    try {
        const std::string source = doc.value("source", "synthetic");
        if (source == "synthetic") {
            config.source = DataSource::Synthetic;
        } else if (source == "quotes") {
            config.source = DataSource::Quotes;
        } else if (source == "daily") {
            config.source = DataSource::Daily;
        } else {
            throw ConfigError("unknown source: " + source);
        }
        if (doc.contains("seed")) {
            config.seed = doc.at("seed").get<std::uint64_t>();
            config.seedSet = true;
        }
        config.outputDir = doc.value("output_dir", "out");
        config.workers = doc.value("workers", 0);
        config.quoteFiles = doc.value("quote_files", std::vector<std::string>{});
        config.quoteDates = doc.value("quote_dates", std::vector<std::string>{});
        config.calendarPath = doc.value("calendar", "");
        config.deltaSeconds = doc.value("delta_seconds", 1.0);
        config.includeOvernight = doc.value("include_overnight", false);
        config.dailyFile = doc.value("daily_file", "");
        config.epochColumns = doc.value("epoch_columns", 0);
        config.intervalEpochs = doc.value("interval_epochs", 25);
        config.allowRemainder = doc.value("allow_remainder", true);
        if (doc.contains("binning")) {
            const auto& b = doc.at("binning");
            const std::string rule = b.value("rule", "default");
            if (rule == "uniform") {
                config.binning = BinningRule::uniform(b.at("lo").get<double>(),
                                                      b.at("hi").get<double>(),
                                                      b.at("count").get<int>());
            } else if (rule == "freedman-diaconis") {
                config.binning = BinningRule::freedmanDiaconis(b.value("clip_lo", -50.0),
                                                               b.value("clip_hi", 50.0));
            } else if (rule != "default") {
                throw ConfigError("unknown binning rule: " + rule);
            }
        }
        if (doc.contains("fit")) {
            const auto& f = doc.at("fit");
            config.fit.lMax = f.value("l_max", config.fit.lMax);
            config.fit.dofMin = f.value("n_min", config.fit.dofMin);
            config.fit.dofMax = f.value("n_max", config.fit.dofMax);
            config.fit.shapeMax = f.value("l_rot_max", config.fit.shapeMax);
            config.fit.minLogBinCount = f.value("min_log_count", config.fit.minLogBinCount);
            config.fit.evaluationBudget = f.value("budget", config.fit.evaluationBudget);
            config.fit.weighted = f.value("weighted", config.fit.weighted);
        }
        config.families = doc.value("families", config.families);
        config.overlayFamily = doc.value("overlay_family", config.overlayFamily);
        config.overlayScale = doc.value("overlay_scale", config.overlayScale);
        if (doc.contains("synth")) {
            const auto& s = doc.at("synth");
            config.synth.tickers = s.value("K", config.synth.tickers);
            config.synth.epochs = s.value("epochs", config.synth.epochs);
            config.synth.columnsPerEpoch = s.value("columns_per_epoch", config.synth.columnsPerEpoch);
            config.synth.factorLoading = s.value("rho", config.synth.factorLoading);
            config.synth.kernel = s.value("kernel", config.synth.kernel);
            config.synth.l = s.value("l", config.synth.l);
            config.synth.ensemble = s.value("ensemble", config.synth.ensemble);
            config.synth.dof = s.value("N", config.synth.dof);
            config.synth.shape = s.value("L", config.synth.shape);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    config.validate();
    return config;
}

nlohmann::json RunConfig::toJson() const {
    nlohmann::json doc;
    doc["source"] = source == DataSource::Synthetic ? "synthetic"
                    : source == DataSource::Quotes  ? "quotes"
                                                    : "daily";
    if (seedSet) doc["seed"] = seed;
    doc["output_dir"] = outputDir;
    doc["workers"] = workers;
    doc["quote_files"] = quoteFiles;
    doc["quote_dates"] = quoteDates;
    doc["calendar"] = calendarPath;
    doc["delta_seconds"] = deltaSeconds;
    doc["include_overnight"] = includeOvernight;
    doc["daily_file"] = dailyFile;
    doc["epoch_columns"] = epochColumns;
    doc["interval_epochs"] = intervalEpochs;
    doc["allow_remainder"] = allowRemainder;
    if (binning) {
        doc["binning"] = {{"rule", binning->kind == BinningRule::Kind::Uniform ? "uniform"
                                                                               : "freedman-diaconis"},
                          {"lo", binning->lo},
                          {"hi", binning->hi},
                          {"count", binning->count}};
    }
    doc["fit"] = {{"l_max", fit.lMax},           {"n_min", fit.dofMin},
                  {"n_max", fit.dofMax},         {"l_rot_max", fit.shapeMax},
                  {"min_log_count", fit.minLogBinCount},
                  {"budget", fit.evaluationBudget}, {"weighted", fit.weighted}};
    doc["families"] = families;
    doc["overlay_family"] = overlayFamily;
    doc["overlay_scale"] = overlayScale;
    doc["synth"] = {{"K", synth.tickers},
                    {"epochs", synth.epochs},
                    {"columns_per_epoch", synth.columnsPerEpoch},
                    {"rho", synth.factorLoading},
                    {"kernel", synth.kernel},
                    {"l", synth.l},
                    {"ensemble", synth.ensemble},
                    {"N", synth.dof},
                    {"L", synth.shape}};
    return doc;
}

void RunConfig::validate() const {
    if (source == DataSource::Synthetic && !seedSet) {
        throw ConfigError("synthetic source needs an explicit seed");
    }
    if (source == DataSource::Quotes) {
        if (quoteFiles.empty()) throw ConfigError("quotes source needs quote_files");
        if (calendarPath.empty()) throw ConfigError("quotes source needs a calendar");
        if (!quoteDates.empty() && quoteDates.size() != quoteFiles.size()) {
            throw ConfigError("quote_dates must match quote_files one to one");
        }
        for (const auto& f : quoteFiles) {
            if (!std::filesystem::exists(f)) throw ConfigError("quote file missing: " + f);
        }
        if (!std::filesystem::exists(calendarPath)) {
            throw ConfigError("calendar file missing: " + calendarPath);
        }
    }
    if (source == DataSource::Daily) {
        if (dailyFile.empty()) throw ConfigError("daily source needs daily_file");
        if (!std::filesystem::exists(dailyFile)) {
            throw ConfigError("daily file missing: " + dailyFile);
        }
    }
    if (intervalEpochs < 1) throw ConfigError("interval_epochs must be positive");
    for (const auto& f : families) static_cast<void>(intervalFamilyFromString(f));
    static_cast<void>(intervalFamilyFromString(overlayFamily));
    static_cast<void>(fitScaleFromString(overlayScale));
}

ReturnPanel acquirePanel(const RunConfig& config) {
    switch (config.source) {
        case DataSource::Synthetic: {
            const auto& s = config.synth;
            const EpochKernel kernel = s.kernel == "algebraic" ? EpochKernel::algebraic(s.l)
                                                               : EpochKernel::gaussian();
            std::optional<EnsembleScaleLaw> ensemble;
            if (s.ensemble == "gaussian") {
                ensemble = EnsembleScaleLaw::gaussian(s.dof);
            } else if (s.ensemble == "algebraic") {
                ensemble = EnsembleScaleLaw::algebraic(s.dof, s.shape);
            } else if (s.ensemble != "none") {
                throw ConfigError("unknown ensemble: " + s.ensemble);
            }
            return synthesizePanel(oneFactorCorrelation(s.tickers, s.factorLoading), kernel,
                                   ensemble, s.epochs, s.columnsPerEpoch, config.seed);
        }
        case DataSource::Quotes: {
            const auto calendar = TradingCalendar::fromJsonFile(config.calendarPath);
            std::vector<QuoteTick> ticks;
            std::int64_t rejected = 0;
            for (std::size_t i = 0; i < config.quoteFiles.size(); ++i) {
                QuoteSchema schema;
                if (!config.quoteDates.empty()) schema.defaultDate = config.quoteDates[i];
                std::ifstream in(config.quoteFiles[i]);
                if (!in) throw DataError("cannot open quote file " + config.quoteFiles[i]);
                auto parsed = parseQuotes(in, schema);
                rejected += parsed.rejected;
                ticks.insert(ticks.end(), parsed.ticks.begin(), parsed.ticks.end());
            }
            std::stable_sort(ticks.begin(), ticks.end(),
                             [](const QuoteTick& a, const QuoteTick& b) {
                                 if (a.ticker != b.ticker) return a.ticker < b.ticker;
                                 return a.timestamp < b.timestamp;
                             });
            const auto grid = resampleGrid(buildMidpoints(ticks), calendar, config.deltaSeconds);
            return logReturns(grid.grid, config.includeOvernight);
        }
        case DataSource::Daily: {
            std::ifstream in(config.dailyFile);
            if (!in) throw DataError("cannot open daily file " + config.dailyFile);
            const auto loaded = loadDailyPanel(in);
            return logReturns(loaded.grid, false);
        }
    }
    throw ConfigError("unreachable source");
}

int runPipeline(const RunConfig& config) {
    namespace fs = std::filesystem;

    // env var for the output root; relative dirs are placed under it
    std::string outputDir = config.outputDir;
    if (const char* root = std::getenv("RETMIX_OUTPUT_ROOT"); root && *root &&
                                                              fs::path(outputDir).is_relative()) {
        outputDir = (fs::path(root) / outputDir).string();
    }
    fs::create_directories(outputDir);
    fs::create_directories(outputDir + "/densities");
    fs::create_directories(outputDir + "/fits");

    const ReturnPanel panel = stage("acquire", [&] { return acquirePanel(config); });
    const std::string delta = panel.deltaLabel;

    const EpochPartition part = stage("partition", [&] {
        return config.epochColumns > 0
                   ? partition(panel, config.epochColumns, config.intervalEpochs,
                               config.allowRemainder)
                   : partitionBySegments(panel, config.intervalEpochs);
    });
    const std::size_t nEpochs = part.epochs.size();

    // per-epoch normalization, aggregation, and fits on both scales
    std::vector<NormalizedPanel> normalized(nEpochs);
    std::vector<FitResult> epochLog(nEpochs);
    std::vector<FitResult> epochLin(nEpochs);
    stage("epoch-fits", [&] {
        parallelFor(nEpochs, config.workers, [&](std::size_t e) {
            const auto& slice = part.epochs[e];
            normalized[e] = normalizeTimeSeries(slice);
            const auto spec = eigendecompose(timeCorrelation(normalized[e]));
            const auto pool = aggregate(rotateReturns(normalized[e], spec));
            const auto density =
                estimateDensity(pool, config.binning ? *config.binning : defaultFitBinning(pool),
                                "aggr,epoch" + std::to_string(e));
            for (const FitScale scale : {FitScale::Log, FitScale::Linear}) {
                auto fit = fitEpoch(density, scale, config.fit);
                fit.deltaLabel = delta;
                fit.sliceLabel = "epoch " + std::to_string(e);
                (scale == FitScale::Log ? epochLog : epochLin)[e] = fit;
            }
        });
        return 0;
    });

    // epoch fit table (one row per epoch and scale)
    stage("epoch-tables", [&] {
        CsvWriter csv(outputDir + "/epoch_fits.csv");
        csv.row({"epoch", "fit", "delta_t", "l_rot", "chi2_ln", "chi2_lin", "boundary"});
        for (std::size_t e = 0; e < nEpochs; ++e) {
            csv.row({std::to_string(e), "log", delta, formatDouble(epochLog[e].param("l")),
                     formatDouble(epochLog[e].chiSquared), "",
                     epochLog[e].anyBoundary() ? "1" : "0"});
            csv.row({std::to_string(e), "lin", delta, formatDouble(epochLin[e].param("l")), "",
                     formatDouble(epochLin[e].chiSquared),
                     epochLin[e].anyBoundary() ? "1" : "0"});
        }
        std::ofstream fits(outputDir + "/fits/epoch_fits.jsonl");
        for (std::size_t e = 0; e < nEpochs; ++e) {
            fits << nlohmann::json::parse(epochLog[e].toJson()).dump() << "\n";
            fits << nlohmann::json::parse(epochLin[e].toJson()).dump() << "\n";
        }
        return 0;
    });

    const EpochAverages avgLog = averageEpochParams(epochLog);
    const EpochAverages avgLin = averageEpochParams(epochLin);
    stage("epoch-averages", [&] {
        CsvWriter csv(outputDir + "/epoch_averages.csv");
        csv.row({"fit", "delta_t", "mean_l_rot", "mean_chi2_ln", "mean_chi2_lin"});
        csv.row({"log", delta, formatDouble(avgLog.meanShape), formatDouble(avgLog.meanChiSquared),
                 ""});
        csv.row({"lin", delta, formatDouble(avgLin.meanShape), "",
                 formatDouble(avgLin.meanChiSquared)});
        return 0;
    });

    // long intervals: concatenate, aggregate, fit the configured families
    const std::size_t nIntervals = part.intervals.size();
    struct IntervalFits {
        std::map<std::string, FitResult> byFamilyScale;  // key: family|scale
    };
    std::vector<IntervalFits> intervalFits(nIntervals);
    stage("interval-fits", [&] {
        parallelFor(nIntervals, config.workers, [&](std::size_t i) {
            const auto [firstEpoch, lastEpoch] = part.intervals[i];
            std::vector<NormalizedPanel> eps(normalized.begin() + firstEpoch,
                                             normalized.begin() + lastEpoch);
            const auto interval = concatenateEpochs(eps);
            const auto spec = eigendecompose(timeCorrelation(interval));
            const auto pool = aggregate(rotateReturns(interval, spec));
            const auto density =
                estimateDensity(pool, config.binning ? *config.binning : defaultFitBinning(pool),
                                "aggr,interval" + std::to_string(i));
            density.writeCsv(outputDir + "/densities/interval_" + std::to_string(i) + ".csv");
            for (const auto& familyName : config.families) {
                const IntervalFamily family = intervalFamilyFromString(familyName);
                for (const FitScale scale : {FitScale::Log, FitScale::Linear}) {
                    std::optional<double> lFixed;
                    if (familyHasAlgebraicKernel(family)) {
                        lFixed = scale == FitScale::Log ? avgLog.meanShape : avgLin.meanShape;
                    }
                    auto fit = fitInterval(density, family, lFixed, scale, config.fit);
                    fit.deltaLabel = delta;
                    fit.sliceLabel = "interval " + std::to_string(i);
                    intervalFits[i].byFamilyScale[familyName + "|" + to_string(scale)] = fit;
                }
            }
        });
        return 0;
    });

    const std::string lengthLabel = std::to_string(config.intervalEpochs) + "ep";
    stage("interval-tables", [&] {
        const auto cell = [&](std::size_t i, const std::string& family, FitScale scale,
                              const std::string& param) -> std::string {
            const auto key = family + "|" + to_string(scale);
            const auto it = intervalFits[i].byFamilyScale.find(key);
            if (it == intervalFits[i].byFamilyScale.end()) return "";
            if (!it->second.parameters.count(param)) return "";
            return formatDouble(it->second.param(param));
        };
        CsvWriter params(outputDir + "/interval_fits.csv");
        params.row({"interval", "fit", "delta_t", "interval_length", "GG_N", "GA_L", "GA_N",
                    "AG_N", "AA_L", "AA_N"});
        for (std::size_t i = 0; i < nIntervals; ++i) {
            for (const FitScale scale : {FitScale::Log, FitScale::Linear}) {
                params.row({std::to_string(i), to_string(scale), delta, lengthLabel,
                            cell(i, "GG", scale, "N"), cell(i, "GA", scale, "L"),
                            cell(i, "GA", scale, "N"), cell(i, "AG", scale, "N"),
                            cell(i, "AA", scale, "L"), cell(i, "AA", scale, "N")});
            }
        }

        CsvWriter chi(outputDir + "/interval_chi2.csv");
        chi.row({"interval", "fit", "delta_t", "interval_length", "GG", "GA", "AG", "AA"});
        const auto chiCell = [&](std::size_t i, const std::string& family,
                                 FitScale scale) -> std::string {
            const auto key = family + "|" + to_string(scale);
            const auto it = intervalFits[i].byFamilyScale.find(key);
            return it == intervalFits[i].byFamilyScale.end()
                       ? ""
                       : formatDouble(it->second.chiSquared);
        };
        for (std::size_t i = 0; i < nIntervals; ++i) {
            for (const FitScale scale : {FitScale::Log, FitScale::Linear}) {
                chi.row({std::to_string(i), to_string(scale), delta, lengthLabel,
                         chiCell(i, "GG", scale), chiCell(i, "GA", scale), chiCell(i, "AG", scale),
                         chiCell(i, "AA", scale)});
            }
        }

        CsvWriter avg(outputDir + "/interval_averages.csv");
        avg.row({"fit", "delta_t", "interval_length", "GG_N", "GA_L", "GA_N", "AG_N", "AA_L",
                 "AA_N"});
        for (const FitScale scale : {FitScale::Log, FitScale::Linear}) {
            std::vector<std::string> row = {to_string(scale), delta, lengthLabel};
            for (const auto& [family, param] :
                 std::vector<std::pair<std::string, std::string>>{{"GG", "N"},
                                                                  {"GA", "L"},
                                                                  {"GA", "N"},
                                                                  {"AG", "N"},
                                                                  {"AA", "L"},
                                                                  {"AA", "N"}}) {
                double sum = 0.0;
                int count = 0;
                for (std::size_t i = 0; i < nIntervals; ++i) {
                    const auto key = family + "|" + to_string(scale);
                    const auto it = intervalFits[i].byFamilyScale.find(key);
                    if (it != intervalFits[i].byFamilyScale.end() &&
                        it->second.parameters.count(param)) {
                        sum += it->second.param(param);
                        ++count;
                    }
                }
                row.push_back(count > 0 ? formatDouble(sum / count) : "");
            }
            avg.row(row);
        }

        std::ofstream fits(outputDir + "/fits/interval_fits.jsonl");
        for (std::size_t i = 0; i < nIntervals; ++i) {
            for (const auto& [key, fit] : intervalFits[i].byFamilyScale) {
                fits << nlohmann::json::parse(fit.toJson()).dump() << "\n";
            }
        }
        return 0;
    });

    // epoch-vs-interval overlay on the first interval
    stage("overlay", [&] {
        const FitScale scale = fitScaleFromString(config.overlayScale);
        const auto& epochFits = scale == FitScale::Log ? epochLog : epochLin;
        const auto key = config.overlayFamily + "|" + to_string(scale);
        const auto it = intervalFits.front().byFamilyScale.find(key);
        if (it == intervalFits.front().byFamilyScale.end()) {
            throw ConfigError("overlay family " + config.overlayFamily + " is not among the fits");
        }
        const auto report = epochVsIntervalOverlay(epochFits, it->second);
        report.write(outputDir + "/overlay");
        return 0;
    });

    // manifest: config echo, config hash, artifact hashes; no timestamps
    stage("manifest", [&] {
        nlohmann::json manifest;
        manifest["version"] = kVersion;
        manifest["config"] = config.toJson();
        const std::string configDump = manifest["config"].dump();
        char hashBuf[24];
        std::snprintf(hashBuf, sizeof(hashBuf), "%016llx",
                      static_cast<unsigned long long>(
                          fnv1a(configDump.data(), configDump.size())));
        manifest["config_hash"] = hashBuf;
        manifest["epochs"] = nEpochs;
        manifest["intervals"] = nIntervals;
        manifest["tickers"] = panel.rows();
        manifest["columns"] = panel.cols();

        nlohmann::json artifacts;
        std::vector<std::string> files;
        for (const auto& entry : fs::recursive_directory_iterator(outputDir)) {
            if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
                files.push_back(fs::relative(entry.path(), outputDir).string());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& rel : files) {
            std::ifstream in(fs::path(outputDir) / rel, std::ios::binary);
            std::stringstream buf;
            buf << in.rdbuf();
            const std::string bytes = buf.str();
            std::snprintf(hashBuf, sizeof(hashBuf), "%016llx",
                          static_cast<unsigned long long>(fnv1a(bytes.data(), bytes.size())));
            artifacts[rel] = hashBuf;
        }
        manifest["artifacts"] = artifacts;
        std::ofstream out(outputDir + "/manifest.json");
        out << manifest.dump(2) << "\n";
        return 0;
    });

    return 0;
}

}  // namespace retmix
