#pragma once

#include <functional>
#include <span>

namespace retmix {

struct QuadratureOptions {
    double relTol = 1e-8;
    double absTol = 0.0;
    int maxSubdivisions = 10000;
};

struct QuadratureOutcome {
    double value = 0.0;
    double errorEstimate = 0.0;
    int subdivisions = 0;
    bool converged = false;
};

/// Globally adaptive Gauss-Kronrod 7/15 on [lo, hi]. `seeds` pre-splits the
/// interval at the given interior points before refinement starts.
QuadratureOutcome adaptiveIntegrate(const std::function<double(double)>& f, double lo, double hi,
                                    const QuadratureOptions& opts = {},
                                    std::span<const double> seeds = {});

/// As adaptiveIntegrate, but throws NumericalError with diagnostics when the
/// subdivision budget is exhausted before the tolerance is met.
double integrateOrThrow(const std::function<double(double)>& f, double lo, double hi,
                        const QuadratureOptions& opts = {}, std::span<const double> seeds = {});

}  // namespace retmix
