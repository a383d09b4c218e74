#include "retmix/fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "retmix/errors.hpp"

namespace retmix {

std::string to_string(FitScale scale) { return scale == FitScale::Linear ? "lin" : "log"; }

FitScale fitScaleFromString(const std::string& s) {
    if (s == "lin" || s == "linear") return FitScale::Linear;
    if (s == "log" || s == "ln") return FitScale::Log;
    throw ConfigError("unknown fit scale: " + s);
}

double FitResult::param(const std::string& name) const {
    const auto it = parameters.find(name);
    if (it == parameters.end()) throw DataError("fit result has no parameter " + name);
    return it->second;
}

bool FitResult::anyBoundary() const {
    for (const auto& [name, hit] : boundaryFlags) {
        if (hit) return true;
    }
    return false;
}

std::string FitResult::toJson() const {
    nlohmann::json doc;
    doc["family"] = family;
    doc["scale"] = to_string(scale);
    doc["parameters"] = parameters;
    doc["chi2"] = chiSquared;
    doc["bins_used"] = binsUsed;
    doc["boundary_flags"] = boundaryFlags;
    if (!deltaLabel.empty()) doc["delta"] = deltaLabel;
    if (!sliceLabel.empty()) doc["slice"] = sliceLabel;
    return doc.dump(2);
}

FitResult FitResult::fromJsonText(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed fit result json: ") + e.what());
    }
    FitResult out;
    out.family = doc.at("family").get<std::string>();
    out.scale = fitScaleFromString(doc.at("scale").get<std::string>());
    out.parameters = doc.at("parameters").get<std::map<std::string, double>>();
    out.chiSquared = doc.at("chi2").get<double>();
    out.binsUsed = doc.value("bins_used", 0);
    if (doc.contains("boundary_flags")) {
        out.boundaryFlags = doc.at("boundary_flags").get<std::map<std::string, bool>>();
    }
    out.deltaLabel = doc.value("delta", "");
    out.sliceLabel = doc.value("slice", "");
    return out;
}

FitResult FitResult::fromJsonFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open fit result file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return fromJsonText(buf.str());
}

ModelDistribution FitResult::model() const {
    if (family == "A") return ModelDistribution(EpochKernel::algebraic(param("l")));
    if (family == "G") return ModelDistribution(EpochKernel::gaussian());
    const IntervalFamily fam = intervalFamilyFromString(family);
    const double l = familyHasAlgebraicKernel(fam) ? param("l") : 0.0;
    const double L = familyHasAlgebraicEnsemble(fam) ? param("L") : 0.0;
    return makeIntervalModel(fam, l, param("N"), L);
}

std::vector<double> modelCurve(const ModelDistribution& model, const EmpiricalDensity& density) {
    std::vector<double> centers(static_cast<std::size_t>(density.binCount()));
    for (int b = 0; b < density.binCount(); ++b) centers[static_cast<std::size_t>(b)] = density.center(b);
    std::vector<double> curve = pdfGrid(model, centers);
    for (int b = 0; b < density.binCount(); ++b) {
        if (!std::isfinite(curve[static_cast<std::size_t>(b)])) {
            curve[static_cast<std::size_t>(b)] =
                model.binAverage(density.edges[static_cast<std::size_t>(b)],
                                 density.edges[static_cast<std::size_t>(b) + 1]);
        }
    }
    return curve;
}

namespace {

struct Objective {
    const EmpiricalDensity* density;
    FitScale scale;
    int minLogBinCount;
    bool weighted = false;

    // (possibly weighted) residual sum of squares plus the used-bin count
    std::pair<double, int> operator()(const std::vector<double>& curve) const {
        double ssr = 0.0;
        int used = 0;
        for (int b = 0; b < density->binCount(); ++b) {
            const double model = curve[static_cast<std::size_t>(b)];
            const double emp = density->density[static_cast<std::size_t>(b)];
            const auto count = density->counts[static_cast<std::size_t>(b)];
            if (scale == FitScale::Linear) {
                const double r = emp - model;
                // inverse-variance up to a constant: Var(p_hat) ~ p / (n w);
                // empty bins are floored at one count's worth of density
                const double floor =
                    1.0 / (static_cast<double>(std::max<std::int64_t>(density->sampleCount, 1)) *
                           density->width(b));
                const double w = weighted ? 1.0 / std::max(emp, floor) : 1.0;
                ssr += w * r * r;
                ++used;
            } else {
                if (count < minLogBinCount) continue;
                if (!(model > 0.0)) return {std::numeric_limits<double>::infinity(), 0};
                const double r = std::log(emp) - std::log(model);
                // Var(ln p_hat) ~ 1 / count
                const double w = weighted ? static_cast<double>(count) : 1.0;
                ssr += w * r * r;
                ++used;
            }
        }
        return {ssr, used};
    }
};

struct Scan1D {
    double best = 0.0;
    double bestValue = std::numeric_limits<double>::infinity();
    double bracketLo = 0.0;
    double bracketHi = 0.0;
};

Scan1D coarseScan(const std::function<double(double)>& f, const std::vector<double>& grid) {
    Scan1D out;
    std::size_t bestIdx = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = f(grid[i]);
        if (v < out.bestValue) {
            out.bestValue = v;
            out.best = grid[i];
            bestIdx = i;
        }
    }
    out.bracketLo = grid[bestIdx > 0 ? bestIdx - 1 : 0];
    out.bracketHi = grid[std::min(bestIdx + 1, grid.size() - 1)];
    return out;
}

double goldenSection(const std::function<double(double)>& f, double lo, double hi, int iterations) {
    constexpr double phi = 0.6180339887498949;
    double a = lo;
    double b = hi;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int i = 0; i < iterations && (b - a) > 1e-10 * (std::fabs(a) + std::fabs(b) + 1e-12); ++i) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

std::vector<double> logSpaced(double lo, double hi, int count) {
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double llo = std::log(lo);
    const double lhi = std::log(hi);
    for (int i = 0; i < count; ++i) {
        grid[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (count - 1));
    }
    return grid;
}

bool nearBound(double value, double bound, double span) {
    return std::fabs(value - bound) < 1e-3 * span;
}

// Nelder-Mead in log-parameter space with an infeasibility penalty.
std::pair<double, double> nelderMead2D(
    const std::function<double(double, double)>& f, double x0, double y0, int budget) {
    struct Vertex {
        double x, y, value;
    };
    auto eval = [&](double lx, double ly) { return f(std::exp(lx), std::exp(ly)); };
    std::array<Vertex, 3> simplex = {
        Vertex{std::log(x0), std::log(y0), 0.0},
        Vertex{std::log(x0) + 0.25, std::log(y0), 0.0},
        Vertex{std::log(x0), std::log(y0) + 0.25, 0.0},
    };
    int evals = 0;
    for (auto& v : simplex) {
        v.value = eval(v.x, v.y);
        ++evals;
    }
    while (evals < budget) {
        std::sort(simplex.begin(), simplex.end(),
                  [](const Vertex& a, const Vertex& b) { return a.value < b.value; });
        const double size = std::max(
            std::hypot(simplex[1].x - simplex[0].x, simplex[1].y - simplex[0].y),
            std::hypot(simplex[2].x - simplex[0].x, simplex[2].y - simplex[0].y));
        if (size < 1e-8) break;
        const double cx = 0.5 * (simplex[0].x + simplex[1].x);
        const double cy = 0.5 * (simplex[0].y + simplex[1].y);
        const Vertex& worst = simplex[2];
        Vertex reflected{cx + (cx - worst.x), cy + (cy - worst.y), 0.0};
        reflected.value = eval(reflected.x, reflected.y);
        ++evals;
        if (reflected.value < simplex[0].value) {
            Vertex expanded{cx + 2.0 * (cx - worst.x), cy + 2.0 * (cy - worst.y), 0.0};
            expanded.value = eval(expanded.x, expanded.y);
            ++evals;
            simplex[2] = expanded.value < reflected.value ? expanded : reflected;
            continue;
        }
        if (reflected.value < simplex[1].value) {
            simplex[2] = reflected;
            continue;
        }
        Vertex contracted{cx + 0.5 * (worst.x - cx), cy + 0.5 * (worst.y - cy), 0.0};
        contracted.value = eval(contracted.x, contracted.y);
        ++evals;
        if (contracted.value < worst.value) {
            simplex[2] = contracted;
            continue;
        }
        for (int i = 1; i < 3; ++i) {
            simplex[static_cast<std::size_t>(i)].x =
                0.5 * (simplex[static_cast<std::size_t>(i)].x + simplex[0].x);
            simplex[static_cast<std::size_t>(i)].y =
                0.5 * (simplex[static_cast<std::size_t>(i)].y + simplex[0].y);
            simplex[static_cast<std::size_t>(i)].value =
                eval(simplex[static_cast<std::size_t>(i)].x, simplex[static_cast<std::size_t>(i)].y);
            ++evals;
        }
    }
    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& a, const Vertex& b) { return a.value < b.value; });
    return {std::exp(simplex[0].x), std::exp(simplex[0].y)};
}

}  // namespace

double chiSquared(const EmpiricalDensity& density, const std::vector<double>& curve, FitScale scale,
                  int nParams, int minLogBinCount) {
    if (curve.size() != static_cast<std::size_t>(density.binCount())) {
        throw DataError("model curve length does not match the density grid");
    }
    const Objective obj{&density, scale, minLogBinCount, false};
    const auto [ssr, used] = obj(curve);
    if (used < nParams + 2) {
        throw DataError("too few usable bins for a normalized chi^2: " + std::to_string(used));
    }
    return ssr / (used - nParams);
}

FitResult fitEpoch(const EmpiricalDensity& density, FitScale scale, const FitConfig& config) {
    const Objective objective{&density, scale, config.minLogBinCount, config.weighted};
    std::vector<double> centers(static_cast<std::size_t>(density.binCount()));
    for (int b = 0; b < density.binCount(); ++b) centers[static_cast<std::size_t>(b)] = density.center(b);

    int evals = 0;
    const auto ssrAt = [&](double l) {
        ++evals;
        const ModelDistribution model(EpochKernel::algebraic(l));
        return objective(pdfGrid(model, centers)).first;
    };

    // coarse grid, log-spaced in the offset above the lower bound
    std::vector<double> grid;
    for (double offset : logSpaced(1e-3, config.lMax - config.lMin, 48)) {
        grid.push_back(config.lMin + offset);
    }
    const auto scan = coarseScan(ssrAt, grid);
    if (!std::isfinite(scan.bestValue)) throw DataError("no usable bins for the epoch fit");
    const double l = goldenSection(ssrAt, scan.bracketLo, scan.bracketHi,
                                   std::max(16, config.evaluationBudget - evals));

    FitResult out;
    out.family = "A";
    out.scale = scale;
    out.parameters["l"] = l;
    out.boundaryFlags["l"] = nearBound(l, config.lMax, config.lMax - config.lMin) ||
                             nearBound(l, config.lMin, config.lMax - config.lMin);
    const auto curve = modelCurve(ModelDistribution(EpochKernel::algebraic(l)), density);
    const Objective plain{&density, scale, config.minLogBinCount, false};
    const auto [ssr, used] = plain(curve);
    out.binsUsed = used;
    out.chiSquared = ssr / (used - 1);
    return out;
}

FitResult fitInterval(const EmpiricalDensity& density, IntervalFamily family,
                      std::optional<double> lFixed, FitScale scale, const FitConfig& config) {
    if (familyHasAlgebraicKernel(family) && !lFixed) {
        throw ConfigError(to_string(family) + " interval fit needs the averaged epoch shape l");
    }
    const double l = familyHasAlgebraicKernel(family) ? *lFixed : 0.0;
    const Objective objective{&density, scale, config.minLogBinCount, config.weighted};
    std::vector<double> centers(static_cast<std::size_t>(density.binCount()));
    for (int b = 0; b < density.binCount(); ++b) centers[static_cast<std::size_t>(b)] = density.center(b);

    const auto ssrFor = [&](double dof, double shape) {
        if (dof < config.dofMin || dof > config.dofMax) return std::numeric_limits<double>::infinity();
        if (familyHasAlgebraicEnsemble(family) &&
            (shape <= 0.5 * dof + config.shapeGap || shape > config.shapeMax)) {
            return std::numeric_limits<double>::infinity();
        }
        const auto model = makeIntervalModel(family, l, dof, shape);
        auto curve = pdfGrid(model, centers);
        for (int b = 0; b < density.binCount(); ++b) {
            if (!std::isfinite(curve[static_cast<std::size_t>(b)])) {
                curve[static_cast<std::size_t>(b)] =
                    model.binAverage(density.edges[static_cast<std::size_t>(b)],
                                     density.edges[static_cast<std::size_t>(b) + 1]);
            }
        }
        return objective(curve).first;
    };

    FitResult out;
    out.family = to_string(family);
    out.scale = scale;
    if (familyHasAlgebraicKernel(family)) out.parameters["l"] = l;

    double dof;
    double shape = 0.0;
    if (!familyHasAlgebraicEnsemble(family)) {
        const auto ssr1 = [&](double n) { return ssrFor(n, 0.0); };
        const auto scan = coarseScan(ssr1, logSpaced(config.dofMin, config.dofMax, 48));
        if (!std::isfinite(scan.bestValue)) throw DataError("no usable bins for the interval fit");
        dof = goldenSection(ssr1, scan.bracketLo, scan.bracketHi, 80);
    } else {
        // coarse (N, L) grid honoring L > N/2 + gap
        double bestSsr = std::numeric_limits<double>::infinity();
        double bestDof = 1.0;
        double bestShape = 3.0;
        for (double n : logSpaced(config.dofMin, config.dofMax, 16)) {
            for (double L : logSpaced(0.5 * config.dofMin + config.shapeGap + 0.1, config.shapeMax, 16)) {
                const double v = ssrFor(n, L);
                if (v < bestSsr) {
                    bestSsr = v;
                    bestDof = n;
                    bestShape = L;
                }
            }
        }
        if (!std::isfinite(bestSsr)) throw DataError("no usable bins for the interval fit");
        auto [n, L] = nelderMead2D(ssrFor, bestDof, bestShape, config.evaluationBudget / 2);
        // coordinate polish: alternating golden sections tighten the flat
        // valley the simplex leaves behind
        for (int round = 0; round < 3; ++round) {
            const double nLo = std::max(config.dofMin, 0.7 * n);
            const double nHi = std::min(config.dofMax, 1.4 * n);
            n = goldenSection([&](double v) { return ssrFor(v, L); }, nLo, nHi, 60);
            const double sLo = std::max(0.5 * n + config.shapeGap + 1e-6, 0.7 * L);
            const double sHi = std::min(config.shapeMax, 1.4 * L);
            if (sHi > sLo) {
                L = goldenSection([&](double v) { return ssrFor(n, v); }, sLo, sHi, 60);
            }
        }
        dof = n;
        shape = L;
        out.parameters["L"] = shape;
        out.boundaryFlags["L"] = nearBound(shape, config.shapeMax, config.shapeMax) ||
                                 shape <= 0.5 * dof + config.shapeGap + 1e-3;
    }
    out.parameters["N"] = dof;
    out.boundaryFlags["N"] = nearBound(dof, config.dofMin, config.dofMax) ||
                             nearBound(dof, config.dofMax, config.dofMax);

    const auto model = makeIntervalModel(family, l, dof, shape);
    const auto curve = modelCurve(model, density);
    const Objective plain{&density, scale, config.minLogBinCount, false};
    const auto [ssr, used] = plain(curve);
    const int nParams = familyHasAlgebraicEnsemble(family) ? 2 : 1;
    if (used < nParams + 2) throw DataError("too few usable bins for the interval fit");
    out.binsUsed = used;
    out.chiSquared = ssr / (used - nParams);
    return out;
}

EpochAverages averageEpochParams(const std::vector<FitResult>& results) {
    if (results.empty()) throw DataError("no epoch fits to average");
    EpochAverages out;
    out.scale = results.front().scale;
    out.deltaLabel = results.front().deltaLabel;
    for (const auto& r : results) {
        if (r.scale != out.scale) throw DataError("mixed fit scales in epoch averaging");
        if (r.deltaLabel != out.deltaLabel) throw DataError("mixed return horizons in epoch averaging");
        out.meanShape += r.param("l");
        out.meanChiSquared += r.chiSquared;
        ++out.count;
    }
    out.meanShape /= out.count;
    out.meanChiSquared /= out.count;
    return out;
}

TailSlopes tailExponent(const EmpiricalDensity& density, double qLo, double qHi) {
    if (!(0.0 < qLo && qLo < qHi && qHi < 1.0)) throw ConfigError("tail quantiles must satisfy 0 < lo < hi < 1");

    // |x| quantiles from the histogram itself
    struct AbsBin {
        double absCenter;
        std::int64_t count;
    };
    std::vector<AbsBin> folded;
    std::int64_t total = 0;
    for (int b = 0; b < density.binCount(); ++b) {
        folded.push_back({std::fabs(density.center(b)), density.counts[static_cast<std::size_t>(b)]});
        total += density.counts[static_cast<std::size_t>(b)];
    }
    if (total <= 0) throw DataError("empty density in tail estimation");
    std::sort(folded.begin(), folded.end(),
              [](const AbsBin& a, const AbsBin& b) { return a.absCenter < b.absCenter; });
    const auto quantile = [&](double q) {
        const double target = q * static_cast<double>(total);
        double cum = 0.0;
        for (const auto& bin : folded) {
            cum += static_cast<double>(bin.count);
            if (cum >= target) return bin.absCenter;
        }
        return folded.back().absCenter;
    };

    TailSlopes out;
    out.absLo = quantile(qLo);
    out.absHi = quantile(qHi);
    if (!(out.absHi > out.absLo)) throw DataError("degenerate tail window");

    const auto slopeFor = [&](bool positive, int& nBins) {
        std::vector<double> lx;
        std::vector<double> ly;
        for (int b = 0; b < density.binCount(); ++b) {
            const double c = density.center(b);
            if (positive ? c <= 0.0 : c >= 0.0) continue;
            const double a = std::fabs(c);
            if (a < out.absLo || a > out.absHi) continue;
            if (density.counts[static_cast<std::size_t>(b)] < 1) continue;
            lx.push_back(std::log(a));
            ly.push_back(std::log(density.density[static_cast<std::size_t>(b)]));
        }
        nBins = static_cast<int>(lx.size());
        if (nBins < 5) {
            throw DataError("insufficient tail bins (" + std::to_string(nBins) + ") on the " +
                            (positive ? "positive" : "negative") + " side");
        }
        double mx = 0.0;
        double my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= nBins;
        my /= nBins;
        double sxx = 0.0;
        double sxy = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        return sxy / sxx;
    };
    out.positive = slopeFor(true, out.binsPositive);
    out.negative = slopeFor(false, out.binsNegative);
    return out;
}

}  // namespace retmix
