// retmix command-line front end: thin file-based wrappers around the library
// operations plus the end-to-end `run` pipeline.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "retmix/calendar.hpp"
#include "retmix/container.hpp"
#include "retmix/errors.hpp"
#include "retmix/fitting.hpp"
#include "retmix/grid.hpp"
#include "retmix/models.hpp"
#include "retmix/pipeline.hpp"
#include "retmix/quotes.hpp"
#include "retmix/rotate.hpp"
#include "retmix/spectra.hpp"
#include "retmix/studies.hpp"

using namespace retmix;

namespace {

void writeText(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << text << "\n";
}

BinningRule binningFromFlags(const std::string& spec) {
    if (spec.empty() || spec == "default") {
        // resolved later against the samples
        throw ConfigError("internal: default binning must be resolved by the caller");
    }
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &lo, &hi, &count) == 3) {
        return BinningRule::uniform(lo, hi, count);
    }
    if (spec == "fd" || spec == "freedman-diaconis") {
        return BinningRule::freedmanDiaconis(-50.0, 50.0);
    }
    throw ConfigError("binning must be 'default', 'fd', or lo:hi:count, got " + spec);
}

NormalizedPanel normalizeSlice(const PanelSlice& slice, const std::string& mode) {
    switch (normalizationModeFromString(mode)) {
        case NormalizationMode::TimeSeries: return normalizeTimeSeries(slice);
        case NormalizationMode::PositionSeries: return normalizePositions(slice);
        case NormalizationMode::MeanOnly: return meanOnlyNormalize(slice);
    }
    throw ConfigError("unreachable normalization mode");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"non-stationary return panel analysis toolkit"};
    app.require_subcommand(1);

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic return panel");
    struct {
        int K = 50;
        int epochs = 25;
        int columns = 500;
        double rho = 0.3;
        std::string kernel = "gaussian";
        double l = 2.6;
        std::string ensemble = "none";
        double N = 60.0;
        double L = 12.0;
        std::uint64_t seed = 0;
        bool seedSet = false;
        std::string out;
    } sy;
    synth->add_option("--tickers,-K", sy.K, "panel dimension");
    synth->add_option("--epochs", sy.epochs, "epoch count");
    synth->add_option("--columns", sy.columns, "columns per epoch");
    synth->add_option("--rho", sy.rho, "one-factor loading of the target correlation");
    synth->add_option("--kernel", sy.kernel, "gaussian|algebraic");
    synth->add_option("--l", sy.l, "algebraic kernel shape");
    synth->add_option("--ensemble", sy.ensemble, "none|gaussian|algebraic");
    synth->add_option("--N", sy.N, "ensemble dof");
    synth->add_option("--L", sy.L, "algebraic ensemble shape");
    synth->add_option("--seed", sy.seed, "master seed")->required()->each([&](const std::string&) {
        sy.seedSet = true;
    });
    synth->add_option("--out", sy.out, "output panel container base path")->required();
    synth->callback([&] {
        RunConfig config;
        config.source = DataSource::Synthetic;
        config.seed = sy.seed;
        config.seedSet = sy.seedSet;
        config.synth = SynthConfig{sy.K, sy.epochs, sy.columns, sy.rho, sy.kernel,
                                   sy.l,  sy.ensemble, sy.N,    sy.L};
        config.validate();
        writeReturnPanel(acquirePanel(config), sy.out);
    });

    // ---- ingest ---------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "parse quotes and sample the price grid");
    struct {
        std::vector<std::string> quotes;
        std::vector<std::string> dates;
        std::string calendar;
        double dt = 1.0;
        std::string out;
    } ig;
    ingest->add_option("--quotes", ig.quotes, "quote csv files")->required();
    ingest->add_option("--dates", ig.dates, "per-file dates for time-only stamps");
    ingest->add_option("--calendar", ig.calendar, "calendar json")->required();
    ingest->add_option("--dt", ig.dt, "grid spacing in seconds");
    ingest->add_option("--out", ig.out, "output grid container")->required();
    ingest->callback([&] {
        const auto calendar = TradingCalendar::fromJsonFile(ig.calendar);
        if (!ig.dates.empty() && ig.dates.size() != ig.quotes.size()) {
            throw ConfigError("--dates must match --quotes one to one");
        }
        std::vector<QuoteTick> ticks;
        std::int64_t rejected = 0;
        for (std::size_t i = 0; i < ig.quotes.size(); ++i) {
            QuoteSchema schema;
            if (!ig.dates.empty()) schema.defaultDate = ig.dates[i];
            std::ifstream in(ig.quotes[i]);
            if (!in) throw DataError("cannot open quote file " + ig.quotes[i]);
            auto parsed = parseQuotes(in, schema);
            rejected += parsed.rejected;
            ticks.insert(ticks.end(), parsed.ticks.begin(), parsed.ticks.end());
        }
        std::stable_sort(ticks.begin(), ticks.end(), [](const QuoteTick& a, const QuoteTick& b) {
            if (a.ticker != b.ticker) return a.ticker < b.ticker;
            return a.timestamp < b.timestamp;
        });
        const auto result = resampleGrid(buildMidpoints(ticks), calendar, ig.dt);
        writePriceGrid(result.grid, ig.out);
        std::fprintf(stderr, "ingest: %d tickers, %d grid points, %lld rejected rows",
                     result.grid.tickerCount(), result.grid.gridCount(),
                     static_cast<long long>(rejected));
        if (!result.droppedTickers.empty()) {
            std::fprintf(stderr, ", dropped:");
            for (const auto& t : result.droppedTickers) std::fprintf(stderr, " %s", t.c_str());
        }
        std::fprintf(stderr, "\n");
    });

    // ---- returns --------------------------------------------------------
    auto* returns = app.add_subcommand("returns", "log returns from a price grid");
    struct {
        std::string grid;
        bool overnight = false;
        std::string out;
    } rt;
    returns->add_option("--grid", rt.grid, "price grid container")->required();
    returns->add_flag("--overnight", rt.overnight, "keep day-boundary returns (flagged)");
    returns->add_option("--out", rt.out, "output return panel container")->required();
    returns->callback([&] {
        const auto grid = readPriceGrid(rt.grid);
        writeReturnPanel(logReturns(grid, rt.overnight), rt.out);
    });

    // ---- daily ----------------------------------------------------------
    auto* daily = app.add_subcommand("daily", "load a daily adjusted-close panel");
    struct {
        std::string file;
        std::string out;
    } dl;
    daily->add_option("--file", dl.file, "daily csv (date,ticker,adj_close)")->required();
    daily->add_option("--out", dl.out, "output grid container")->required();
    daily->callback([&] {
        std::ifstream in(dl.file);
        if (!in) throw DataError("cannot open daily file " + dl.file);
        const auto loaded = loadDailyPanel(in);
        writePriceGrid(loaded.grid, dl.out);
        std::fprintf(stderr, "daily: %d tickers x %d dates, %lld duplicates, %zu dropped\n",
                     loaded.grid.tickerCount(), loaded.grid.gridCount(),
                     static_cast<long long>(loaded.duplicateRows), loaded.droppedTickers.size());
    });

    // ---- correlate ------------------------------------------------------
    auto* correlate = app.add_subcommand("correlate", "normalize a slice and correlate it");
    struct {
        std::string panel;
        int begin = 0;
        int end = -1;
        std::string normalize = "time";
        std::string kind = "time";
        std::string outMatrix;
        std::string outSpectrum;
        std::string outNormalized;
        std::string eigenCsv;
    } co;
    correlate->add_option("--panel", co.panel, "return panel container")->required();
    correlate->add_option("--begin", co.begin, "slice start column");
    correlate->add_option("--end", co.end, "slice end column (default: panel end)");
    correlate->add_option("--normalize", co.normalize, "time|position|mean");
    correlate->add_option("--kind", co.kind, "time|position|covariance");
    correlate->add_option("--out-matrix", co.outMatrix, "matrix container");
    correlate->add_option("--out-spectrum", co.outSpectrum, "spectrum container");
    correlate->add_option("--out-normalized", co.outNormalized, "normalized panel container");
    correlate->add_option("--eigen-csv", co.eigenCsv, "eigenvalue list csv");
    correlate->callback([&] {
        const auto panel = readReturnPanel(co.panel);
        PanelSlice slice = fullSlice(panel);
        if (co.end >= 0) {
            if (co.begin < 0 || co.end > panel.cols() || co.begin >= co.end) {
                throw ConfigError("bad slice range");
            }
            slice.begin = co.begin;
            slice.end = co.end;
        }
        const auto normalized = normalizeSlice(slice, co.normalize);
        CorrelationMatrix matrix;
        switch (matrixKindFromString(co.kind)) {
            case MatrixKind::TimeCorrelation: matrix = timeCorrelation(normalized); break;
            case MatrixKind::PositionCorrelation: matrix = positionCorrelation(normalized); break;
            case MatrixKind::Covariance: matrix = covariance(normalized); break;
        }
        const auto spectrum = eigendecompose(matrix);
        if (!co.outNormalized.empty()) writeNormalizedPanel(normalized, co.outNormalized);
        if (!co.outMatrix.empty()) writeMatrix(matrix, co.outMatrix);
        if (!co.outSpectrum.empty()) writeSpectrum(spectrum, co.outSpectrum);
        if (!co.eigenCsv.empty()) {
            std::ofstream out(co.eigenCsv);
            out << "index,eigenvalue\n";
            char buf[64];
            for (int k = 0; k < spectrum.dim(); ++k) {
                std::snprintf(buf, sizeof(buf), "%d,%.17g\n", k, spectrum.eigenvalues(k));
                out << buf;
            }
        }
    });

    // ---- rotate ---------------------------------------------------------
    auto* rotate = app.add_subcommand("rotate", "rotate a normalized panel into an eigenbasis");
    struct {
        std::string normalized;
        std::string spectrum;
        std::string out;
    } ro;
    rotate->add_option("--normalized", ro.normalized, "normalized panel container")->required();
    rotate->add_option("--spectrum", ro.spectrum, "spectrum container")->required();
    rotate->add_option("--out", ro.out, "rotated panel container")->required();
    rotate->callback([&] {
        const auto normalized = readNormalizedPanel(ro.normalized);
        const auto spectrum = readSpectrum(ro.spectrum);
        writeRotatedPanel(rotateReturns(normalized, spectrum), ro.out);
    });

    // ---- aggregate ------------------------------------------------------
    auto* aggregateCmd = app.add_subcommand("aggregate", "pool rescaled rotated returns");
    struct {
        std::string rotated;
        std::string outDensity;
        std::string binning = "default";
        std::string perEigenvectorDir;
    } ag;
    aggregateCmd->add_option("--rotated", ag.rotated, "rotated panel container")->required();
    aggregateCmd->add_option("--out-density", ag.outDensity, "aggregated density csv")->required();
    aggregateCmd->add_option("--binning", ag.binning, "default | fd | lo:hi:count");
    aggregateCmd->add_option("--per-eigenvector", ag.perEigenvectorDir,
                             "directory for per-eigenvector densities");
    aggregateCmd->callback([&] {
        const auto rotated = readRotatedPanel(ag.rotated);
        const auto pool = aggregate(rotated);
        const BinningRule rule =
            ag.binning == "default" ? defaultFitBinning(pool) : binningFromFlags(ag.binning);
        estimateDensity(pool, rule, "aggr").writeCsv(ag.outDensity);
        if (!ag.perEigenvectorDir.empty()) {
            std::filesystem::create_directories(ag.perEigenvectorDir);
            const auto densities = perEigenvectorDensities(rotated, rule);
            for (std::size_t i = 0; i < densities.rotated.size(); ++i) {
                const int k = densities.eigenIndex[i];
                densities.rotated[i].writeCsv(ag.perEigenvectorDir + "/rot_" + std::to_string(k) +
                                              ".csv");
                densities.rescaled[i].writeCsv(ag.perEigenvectorDir + "/rot_scal_" +
                                               std::to_string(k) + ".csv");
            }
        }
    });

    // ---- fit-epoch ------------------------------------------------------
    auto* fitEpochCmd = app.add_subcommand("fit-epoch", "fit the algebraic epoch kernel");
    struct {
        std::string density;
        std::string scale = "log";
        bool weighted = false;
        int minLogCount = 10;
        std::string out;
    } fe;
    fitEpochCmd->add_option("--density", fe.density, "density csv")->required();
    fitEpochCmd->add_option("--scale", fe.scale, "log|lin");
    fitEpochCmd->add_flag("--weighted", fe.weighted, "inverse-variance weighting");
    fitEpochCmd->add_option("--min-log-count", fe.minLogCount, "bin count threshold for log fits");
    fitEpochCmd->add_option("--out", fe.out, "fit result json (default stdout)");
    fitEpochCmd->callback([&] {
        const auto density = EmpiricalDensity::readCsv(fe.density);
        FitConfig config;
        config.weighted = fe.weighted;
        config.minLogBinCount = fe.minLogCount;
        const auto fit = fitEpoch(density, fitScaleFromString(fe.scale), config);
        if (fe.out.empty()) {
            std::cout << fit.toJson() << "\n";
        } else {
            writeText(fe.out, fit.toJson());
        }
    });

    // ---- fit-interval ---------------------------------------------------
    auto* fitIntervalCmd = app.add_subcommand("fit-interval", "fit a long-interval family");
    struct {
        std::string density;
        std::string family = "AA";
        double lFixed = 0.0;
        bool lSet = false;
        std::string scale = "log";
        bool weighted = false;
        int minLogCount = 10;
        std::string out;
    } fi;
    fitIntervalCmd->add_option("--density", fi.density, "density csv")->required();
    fitIntervalCmd->add_option("--family", fi.family, "GG|GA|AG|AA");
    fitIntervalCmd->add_option("--l-fixed", fi.lFixed, "averaged epoch shape for AG/AA")
        ->each([&](const std::string&) { fi.lSet = true; });
    fitIntervalCmd->add_option("--scale", fi.scale, "log|lin");
    fitIntervalCmd->add_flag("--weighted", fi.weighted, "inverse-variance weighting");
    fitIntervalCmd->add_option("--min-log-count", fi.minLogCount, "bin count threshold");
    fitIntervalCmd->add_option("--out", fi.out, "fit result json (default stdout)");
    fitIntervalCmd->callback([&] {
        const auto density = EmpiricalDensity::readCsv(fi.density);
        FitConfig config;
        config.weighted = fi.weighted;
        config.minLogBinCount = fi.minLogCount;
        std::optional<double> lFixed;
        if (fi.lSet) lFixed = fi.lFixed;
        const auto fit = fitInterval(density, intervalFamilyFromString(fi.family), lFixed,
                                     fitScaleFromString(fi.scale), config);
        if (fi.out.empty()) {
            std::cout << fit.toJson() << "\n";
        } else {
            writeText(fi.out, fit.toJson());
        }
    });

    // ---- tails ----------------------------------------------------------
    auto* tails = app.add_subcommand("tails", "log-log tail slopes of a density");
    struct {
        std::string density;
        std::string quantiles = "0.95,0.999";
        std::string out;
    } tl;
    tails->add_option("--density", tl.density, "density csv")->required();
    tails->add_option("--quantiles", tl.quantiles, "lo,hi quantiles of |x|");
    tails->add_option("--out", tl.out, "slopes json (default stdout)");
    tails->callback([&] {
        double lo = 0.0;
        double hi = 0.0;
        if (std::sscanf(tl.quantiles.c_str(), "%lf,%lf", &lo, &hi) != 2) {
            throw ConfigError("--quantiles must be lo,hi");
        }
        const auto slopes = tailExponent(EmpiricalDensity::readCsv(tl.density), lo, hi);
        nlohmann::json doc;
        doc["positive"] = slopes.positive;
        doc["negative"] = slopes.negative;
        doc["bins_positive"] = slopes.binsPositive;
        doc["bins_negative"] = slopes.binsNegative;
        doc["abs_lo"] = slopes.absLo;
        doc["abs_hi"] = slopes.absHi;
        if (tl.out.empty()) {
            std::cout << doc.dump(2) << "\n";
        } else {
            writeText(tl.out, doc.dump(2));
        }
    });

    // ---- studies --------------------------------------------------------
    auto* overnight = app.add_subcommand("study-overnight", "overnight-return artifact study");
    struct {
        std::string grid;
        std::string outDir;
    } ov;
    overnight->add_option("--grid", ov.grid, "price grid container")->required();
    overnight->add_option("--out-dir", ov.outDir, "report directory")->required();
    overnight->callback([&] { overnightStudy(readPriceGrid(ov.grid)).write(ov.outDir); });

    auto* epochLength = app.add_subcommand("study-epoch-length",
                                           "normalization artifact vs epoch length");
    struct {
        std::string panel;
        std::vector<int> lengths = {10, 25, 55, 100, 500, 1000, 2000};
        bool forcePairwise = false;
        std::int64_t maxPairs = 0;
        std::uint64_t seed = 1;
        std::string outDir;
    } el;
    epochLength->add_option("--panel", el.panel, "return panel container")->required();
    epochLength->add_option("--lengths", el.lengths, "epoch lengths");
    epochLength->add_flag("--force-pairwise", el.forcePairwise, "pairwise mode even when T >= K");
    epochLength->add_option("--max-pairs", el.maxPairs, "subsample the pair list");
    epochLength->add_option("--seed", el.seed, "seed for pair subsampling");
    epochLength->add_option("--out-dir", el.outDir, "report directory")->required();
    epochLength->callback([&] {
        EpochLengthOptions options;
        options.lengths = el.lengths;
        options.forcePairwise = el.forcePairwise;
        options.maxPairs = el.maxPairs;
        options.seed = el.seed;
        epochLengthStudy(readReturnPanel(el.panel), options).write(el.outDir);
    });

    auto* shrink = app.add_subcommand("study-shrinkage", "Ledoit-Wolf robustness study");
    struct {
        std::string panel;
        int epochColumns = 0;
        double delta = -1.0;
        std::string outDir;
    } sh;
    shrink->add_option("--panel", sh.panel, "return panel container")->required();
    shrink->add_option("--epoch-columns", sh.epochColumns, "0: use panel segments");
    shrink->add_option("--delta", sh.delta, "force the shrinkage intensity (default: estimate)");
    shrink->add_option("--out-dir", sh.outDir, "report directory")->required();
    shrink->callback([&] {
        ShrinkageStudyOptions options;
        options.epochColumns = sh.epochColumns;
        if (sh.delta >= 0.0) options.forcedDelta = sh.delta;
        shrinkageStudy(readReturnPanel(sh.panel), options).write(sh.outDir);
    });

    auto* overlay = app.add_subcommand("study-overlay", "epoch-vs-interval model overlay");
    struct {
        std::string epochFits;
        std::string intervalFit;
        std::string outDir;
    } ovl;
    overlay->add_option("--epoch-fits", ovl.epochFits, "jsonl file of epoch fit results")
        ->required();
    overlay->add_option("--interval-fit", ovl.intervalFit, "fit result json")->required();
    overlay->add_option("--out-dir", ovl.outDir, "report directory")->required();
    overlay->callback([&] {
        std::ifstream in(ovl.epochFits);
        if (!in) throw DataError("cannot open " + ovl.epochFits);
        std::vector<FitResult> epochFits;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) epochFits.push_back(FitResult::fromJsonText(line));
        }
        const auto intervalFit = FitResult::fromJsonFile(ovl.intervalFit);
        // keep only epoch fits on the interval fit's scale
        std::vector<FitResult> matching;
        for (const auto& fit : epochFits) {
            if (fit.scale == intervalFit.scale && fit.family == "A") matching.push_back(fit);
        }
        epochVsIntervalOverlay(matching, intervalFit).write(ovl.outDir);
    });

    // ---- run ------------------------------------------------------------
    auto* run = app.add_subcommand("run", "full pipeline from a config file");
    struct {
        std::string config;
        std::vector<std::string> sets;
    } rn;
    run->add_option("--config", rn.config, "run config json")->required();
    run->add_option("--set", rn.sets, "override config keys, e.g. --set synth.K=20");
    run->callback([&] {
        std::map<std::string, std::string> overrides;
        for (const auto& kv : rn.sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
            overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        runPipeline(RunConfig::fromJsonFile(rn.config, overrides));
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
