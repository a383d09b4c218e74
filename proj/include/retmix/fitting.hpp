#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "retmix/density.hpp"
#include "retmix/models.hpp"

namespace retmix {

enum class FitScale { Linear, Log };

std::string to_string(FitScale scale);
FitScale fitScaleFromString(const std::string& s);

struct FitConfig {
    double lMin = 1.5;  // open bound; the optimizer never evaluates at lMin
    double lMax = 50.0;
    double dofMin = 0.1;  // N
    double dofMax = 1000.0;
    double shapeGap = 1.01;  // L > N/2 + shapeGap
    double shapeMax = 1000.0;
    int minLogBinCount = 10;  // bins entering the log objective
    int evaluationBudget = 4000;
    // Optional inverse-variance weighting of the least-squares objective
    // (counts on the log scale, bin-occupancy on the linear scale). Off by
    // default: plain least squares on both scales.
    bool weighted = false;
};

struct FitResult {
    std::string family;  // "A" for epoch fits; GG/GA/AG/AA for intervals
    FitScale scale = FitScale::Log;
    std::map<std::string, double> parameters;  // "l" | "N" | "N","L"
    double chiSquared = 0.0;
    int binsUsed = 0;
    std::map<std::string, bool> boundaryFlags;
    std::string deltaLabel;
    std::string sliceLabel;

    double param(const std::string& name) const;
    bool anyBoundary() const;
    std::string toJson() const;
    static FitResult fromJsonText(const std::string& text);
    static FitResult fromJsonFile(const std::string& path);

    /// The fitted model distribution (epoch kernel or interval family).
    ModelDistribution model() const;
};

/// Model curve on the density's bin centers. Bins where the pointwise pdf is
/// not finite (x = 0 singularity of small-N ensembles) fall back to the
/// cdf-difference bin average.
std::vector<double> modelCurve(const ModelDistribution& model, const EmpiricalDensity& density);

/// Normalized chi^2 between an empirical density and a model curve:
/// sum of squared residuals per non-parameter degree of freedom, on the
/// linear scale over all bins, on the log scale over bins with at least
/// `minLogBinCount` samples.
double chiSquared(const EmpiricalDensity& density, const std::vector<double>& curve, FitScale scale,
                  int nParams, int minLogBinCount);

/// Least-squares fit of the algebraic epoch kernel shape l on one scale.
FitResult fitEpoch(const EmpiricalDensity& density, FitScale scale, const FitConfig& config = {});

/// Least-squares fit of a long-interval family. AG/AA require lFixed (the
/// averaged epoch shape); GG/GA ignore it. GG/AG search N; GA/AA search
/// (N, L) by a coarse log-spaced grid, simplex refinement, and coordinate
/// polish.
FitResult fitInterval(const EmpiricalDensity& density, IntervalFamily family,
                      std::optional<double> lFixed, FitScale scale, const FitConfig& config = {});

struct EpochAverages {
    FitScale scale = FitScale::Log;
    std::string deltaLabel;
    double meanShape = 0.0;  // <l_rot>
    double meanChiSquared = 0.0;
    int count = 0;
};

/// Arithmetic averages of epoch fit parameters; inputs must share scale and
/// delta label.
EpochAverages averageEpochParams(const std::vector<FitResult>& results);

struct TailSlopes {
    double positive = 0.0;
    double negative = 0.0;
    int binsPositive = 0;
    int binsNegative = 0;
    double absLo = 0.0;  // |x| window derived from the quantile pair
    double absHi = 0.0;
};

/// Per-sign log-log slope of the density over the |x| window between the
/// given quantiles of |samples| (as represented by the histogram).
TailSlopes tailExponent(const EmpiricalDensity& density, double qLo = 0.95, double qHi = 0.999);

}  // namespace retmix
