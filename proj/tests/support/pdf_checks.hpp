#pragma once

// Test-side integration helpers. These integrate the *public* pdf of a model
// over the real line, independently of the compound-representation quadrature
// inside the library, so normalization and variance checks do not reuse the
// code path they are checking.

#include <cmath>
#include <functional>
#include <vector>

#include "retmix/models.hpp"
#include "retmix/quadrature.hpp"

namespace retmix::testsupport {

// 2 * int_0^inf x^power f(x) dx via x = e^t. The wide upper limit covers the
// slowly converging second moments of the heaviest admissible tails
// (x^2 f ~ x^{-1.2} for l = 1.6 needs x out to ~e^90).
inline double integrateEvenOverReals(const std::function<double(double)>& f, double power = 0.0,
                                     double relTol = 1e-10) {
    const auto integrand = [&](double t) {
        const double x = std::exp(t);
        const double fx = f(x);
        if (fx <= 0.0) return 0.0;
        return std::exp(std::log(fx) + (power + 1.0) * t);
    };
    std::vector<double> seeds;
    for (double t = -24.0; t <= 14.0; t += 2.0) seeds.push_back(t);
    for (double t : {20.0, 30.0, 45.0, 65.0, 88.0}) seeds.push_back(t);
    QuadratureOptions opts;
    opts.relTol = relTol;
    opts.maxSubdivisions = 20000;
    return 2.0 * integrateOrThrow(integrand, -30.0, 95.0, opts, seeds);
}

inline double pdfIntegral(const ModelDistribution& model, double relTol = 1e-10) {
    return integrateEvenOverReals([&](double x) { return model.pdf(x); }, 0.0, relTol);
}

inline double pdfVariance(const ModelDistribution& model, double relTol = 1e-8) {
    return integrateEvenOverReals([&](double x) { return model.pdf(x); }, 2.0, relTol);
}

}  // namespace retmix::testsupport
