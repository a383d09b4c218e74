#pragma once

#include <Eigen/Dense>
#include <vector>

#include "retmix/density.hpp"
#include "retmix/panel.hpp"
#include "retmix/spectra.hpp"

namespace retmix {

/// Returns rotated into the eigenbasis of the matching correlation matrix
/// (rows ordered like the ascending eigenvalues) and additionally rescaled
/// by the square roots of the eigenvalues.
struct RotatedPanel {
    Eigen::MatrixXd rotated;   // rbar, K x T
    Eigen::MatrixXd rescaled;  // rtilde, K x T
    Eigen::VectorXd eigenvalues;
    std::string sliceId;
    MatrixKind basisKind = MatrixKind::TimeCorrelation;
    // Rows whose eigenvalue failed the rank check; their rescaled values are
    // zeroed and aggregation refuses to pool them.
    std::vector<int> degenerateRows;

    int rows() const { return static_cast<int>(rotated.rows()); }
    int cols() const { return static_cast<int>(rotated.cols()); }
};

/// Rotate a normalized panel; panel and decomposition must carry the same
/// slice id, which rules out mixing bases across epochs or intervals.
RotatedPanel rotateReturns(const NormalizedPanel& panel, const SpectralDecomposition& spec);

/// Pool all K*T rescaled values into one sample ("aggregation").
std::vector<double> aggregate(const RotatedPanel& rotated);

struct EigenvectorDensities {
    std::vector<EmpiricalDensity> rotated;    // label rot,k
    std::vector<EmpiricalDensity> rescaled;   // label rot-scal,k
    std::vector<int> eigenIndex;              // index into the decomposition per entry
    std::vector<int> skipped;                 // indices with degenerate/small subpools
    int largestEigenvalueIndex = -1;
};

/// Per-eigenvector densities of rotated and rescaled returns. Subpools with
/// fewer than `minSamples` values or degenerate support are flagged and
/// skipped; the others are returned.
EigenvectorDensities perEigenvectorDensities(const RotatedPanel& rotated, const BinningRule& rule,
                                             std::int64_t minSamples = 100);

}  // namespace retmix
