#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "retmix/panel.hpp"

namespace retmix {

enum class MatrixKind { TimeCorrelation, PositionCorrelation, Covariance };

std::string to_string(MatrixKind kind);
MatrixKind matrixKindFromString(const std::string& s);

struct CorrelationMatrix {
    MatrixKind kind = MatrixKind::TimeCorrelation;
    Eigen::MatrixXd values;
    std::string sliceId;
    int sampleColumns = 0;

    int dim() const { return static_cast<int>(values.rows()); }
};

/// C = (1/T) M M^T for a time-series normalized panel (K x K, unit diagonal).
CorrelationMatrix timeCorrelation(const NormalizedPanel& panel);

/// D = (1/K) E^T E for a position-series normalized panel (T x T, unit diagonal).
CorrelationMatrix positionCorrelation(const NormalizedPanel& panel);

/// Sigma = (1/T) G0 G0^T for a mean-only panel.
CorrelationMatrix covariance(const NormalizedPanel& panel);

/// Rescale a covariance matrix to unit diagonal (Pearson correlation).
CorrelationMatrix correlationFromCovariance(const CorrelationMatrix& cov);

struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // column k pairs with eigenvalues[k]
    MatrixKind sourceKind = MatrixKind::TimeCorrelation;
    std::string sliceId;
    bool fullRank = false;
    double rankRatio = 0.0;  // min eigenvalue / max eigenvalue

    int dim() const { return static_cast<int>(eigenvalues.size()); }
};

/// Symmetric eigendecomposition with a deterministic sign convention (the
/// largest-magnitude entry of each eigenvector is positive; first such entry
/// on magnitude ties) and deterministic ordering of degenerate eigenvalues.
SpectralDecomposition eigendecompose(const CorrelationMatrix& matrix);

/// r^T C^{-1} r evaluated as sum_k rbar_k^2 / Lambda_k. Requires full rank.
double mahalanobis(const Eigen::VectorXd& r, const SpectralDecomposition& spec);

struct ShrinkageResult {
    CorrelationMatrix shrunkCovariance;
    CorrelationMatrix shrunkCorrelation;  // covariance rescaled to unit diagonal
    double delta = 0.0;                   // applied intensity
    double deltaRaw = 0.0;                // estimate before clipping
};

/// Ledoit-Wolf shrinkage toward mu * I with the standard optimal-intensity
/// estimate; `forcedDelta` overrides the estimate (0 disables shrinkage).
ShrinkageResult ledoitWolfShrink(const NormalizedPanel& panel,
                                 std::optional<double> forcedDelta = std::nullopt);

}  // namespace retmix
