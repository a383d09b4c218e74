#include "retmix/rotate.hpp"

#include <algorithm>
#include <cmath>

#include "retmix/errors.hpp"

namespace retmix {

RotatedPanel rotateReturns(const NormalizedPanel& panel, const SpectralDecomposition& spec) {
    if (panel.sliceId != spec.sliceId) {
        throw DataError("slice mismatch: panel " + panel.sliceId + " vs decomposition " +
                        spec.sliceId + " (basis and returns must come from the same slice)");
    }
    if (spec.dim() != panel.rows()) {
        throw DataError("decomposition dimension does not match panel rows");
    }
    RotatedPanel out;
    out.sliceId = panel.sliceId;
    out.basisKind = spec.sourceKind;
    out.eigenvalues = spec.eigenvalues;
    out.rotated = spec.eigenvectors.transpose() * panel.values;
    out.rescaled.resizeLike(out.rotated);
    const double maxEv = spec.eigenvalues(spec.dim() - 1);
    for (int k = 0; k < spec.dim(); ++k) {
        const double ev = spec.eigenvalues(k);
        if (ev > 1e-10 * maxEv && ev > 0.0) {
            out.rescaled.row(k) = out.rotated.row(k) / std::sqrt(ev);
        } else {
            out.rescaled.row(k).setZero();
            out.degenerateRows.push_back(k);
        }
    }
    return out;
}

std::vector<double> aggregate(const RotatedPanel& rotated) {
    if (!rotated.degenerateRows.empty()) {
        throw NumericalError("cannot aggregate a rank-deficient rotation: " +
                             std::to_string(rotated.degenerateRows.size()) +
                             " eigendirections failed the full-rank check");
    }
    std::vector<double> pool;
    pool.reserve(static_cast<std::size_t>(rotated.rows()) * static_cast<std::size_t>(rotated.cols()));
    for (int t = 0; t < rotated.cols(); ++t) {
        for (int k = 0; k < rotated.rows(); ++k) {
            pool.push_back(rotated.rescaled(k, t));
        }
    }
    return pool;
}

EigenvectorDensities perEigenvectorDensities(const RotatedPanel& rotated, const BinningRule& rule,
                                             std::int64_t minSamples) {
    EigenvectorDensities out;
    const int K = rotated.rows();
    out.largestEigenvalueIndex = K - 1;  // ascending eigenvalue order
    std::vector<double> row(static_cast<std::size_t>(rotated.cols()));
    for (int k = 0; k < K; ++k) {
        if (rotated.cols() < minSamples) {
            out.skipped.push_back(k);
            continue;
        }
        for (int t = 0; t < rotated.cols(); ++t) row[static_cast<std::size_t>(t)] = rotated.rotated(k, t);
        const auto [mn, mx] = std::minmax_element(row.begin(), row.end());
        if (*mn == *mx) {
            out.skipped.push_back(k);
            continue;
        }
        out.rotated.push_back(estimateDensity(row, rule, "rot," + std::to_string(k)));
        for (int t = 0; t < rotated.cols(); ++t) row[static_cast<std::size_t>(t)] = rotated.rescaled(k, t);
        out.rescaled.push_back(estimateDensity(row, rule, "rot-scal," + std::to_string(k)));
        out.eigenIndex.push_back(k);
    }
    return out;
}

}  // namespace retmix
