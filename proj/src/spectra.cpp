#include "retmix/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "retmix/errors.hpp"

namespace retmix {

std::string to_string(MatrixKind kind) {
    switch (kind) {
        case MatrixKind::TimeCorrelation: return "time-correlation";
        case MatrixKind::PositionCorrelation: return "position-correlation";
        case MatrixKind::Covariance: return "covariance";
    }
    return "?";
}

MatrixKind matrixKindFromString(const std::string& s) {
    if (s == "time-correlation" || s == "time") return MatrixKind::TimeCorrelation;
    if (s == "position-correlation" || s == "position") return MatrixKind::PositionCorrelation;
    if (s == "covariance") return MatrixKind::Covariance;
    throw ConfigError("unknown matrix kind: " + s);
}

CorrelationMatrix timeCorrelation(const NormalizedPanel& panel) {
    if (panel.mode != NormalizationMode::TimeSeries) {
        throw DataError("time correlation requires a time-series normalized panel, got " +
                        to_string(panel.mode));
    }
    CorrelationMatrix out;
    out.kind = MatrixKind::TimeCorrelation;
    out.sliceId = panel.sliceId;
    out.sampleColumns = panel.cols();
    out.values = panel.values * panel.values.transpose() / static_cast<double>(panel.cols());
    return out;
}

CorrelationMatrix positionCorrelation(const NormalizedPanel& panel) {
    if (panel.mode != NormalizationMode::PositionSeries) {
        throw DataError("position correlation requires a position-series normalized panel, got " +
                        to_string(panel.mode));
    }
    CorrelationMatrix out;
    out.kind = MatrixKind::PositionCorrelation;
    out.sliceId = panel.sliceId;
    out.sampleColumns = panel.rows();
    out.values = panel.values.transpose() * panel.values / static_cast<double>(panel.rows());
    return out;
}

CorrelationMatrix covariance(const NormalizedPanel& panel) {
    if (panel.mode != NormalizationMode::MeanOnly) {
        throw DataError("covariance requires a mean-only panel, got " + to_string(panel.mode));
    }
    CorrelationMatrix out;
    out.kind = MatrixKind::Covariance;
    out.sliceId = panel.sliceId;
    out.sampleColumns = panel.cols();
    out.values = panel.values * panel.values.transpose() / static_cast<double>(panel.cols());
    return out;
}

CorrelationMatrix correlationFromCovariance(const CorrelationMatrix& cov) {
    if (cov.kind != MatrixKind::Covariance) {
        throw DataError("correlationFromCovariance expects a covariance matrix");
    }
    if ((cov.values.diagonal().array() <= 0.0).any()) {
        throw NumericalError("covariance has a non-positive diagonal entry");
    }
    CorrelationMatrix out;
    out.kind = MatrixKind::TimeCorrelation;
    out.sliceId = cov.sliceId;
    out.sampleColumns = cov.sampleColumns;
    const Eigen::VectorXd invSd = cov.values.diagonal().cwiseSqrt().cwiseInverse();
    out.values = invSd.asDiagonal() * cov.values * invSd.asDiagonal();
    return out;
}

SpectralDecomposition eigendecompose(const CorrelationMatrix& matrix) {
    const int n = matrix.dim();
    if (n < 1) throw DataError("cannot decompose an empty matrix");
    const double asym = (matrix.values - matrix.values.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) throw DataError("matrix is not symmetric: max asymmetry " + std::to_string(asym));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix.values);
    if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");

    SpectralDecomposition out;
    out.sourceKind = matrix.kind;
    out.sliceId = matrix.sliceId;
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors();

    // Sign convention: largest-magnitude entry positive. Ties (and one-ulp
    // near-ties, e.g. the (1, -1)/sqrt(2) pair vectors) resolve to the first
    // qualifying index so the convention is stable.
    for (int k = 0; k < n; ++k) {
        double best = 0.0;
        for (int i = 0; i < n; ++i) best = std::max(best, std::fabs(out.eigenvectors(i, k)));
        for (int i = 0; i < n; ++i) {
            if (std::fabs(out.eigenvectors(i, k)) >= best * (1.0 - 1e-12)) {
                if (out.eigenvectors(i, k) < 0.0) out.eigenvectors.col(k) = -out.eigenvectors.col(k);
                break;
            }
        }
    }

    // Eigen already sorts ascending; break exact eigenvalue ties by
    // eigenvector lexicographic order (descending, so the identity matrix
    // decomposes to itself) for reproducibility across platforms.
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (out.eigenvalues(a) != out.eigenvalues(b)) return out.eigenvalues(a) < out.eigenvalues(b);
        for (int i = 0; i < n; ++i) {
            if (out.eigenvectors(i, a) != out.eigenvectors(i, b)) {
                return out.eigenvectors(i, a) > out.eigenvectors(i, b);
            }
        }
        return false;
    });
    bool permuted = false;
    for (int k = 0; k < n; ++k) {
        if (order[static_cast<std::size_t>(k)] != k) permuted = true;
    }
    if (permuted) {
        Eigen::VectorXd vals(n);
        Eigen::MatrixXd vecs(n, n);
        for (int k = 0; k < n; ++k) {
            vals(k) = out.eigenvalues(order[static_cast<std::size_t>(k)]);
            vecs.col(k) = out.eigenvectors.col(order[static_cast<std::size_t>(k)]);
        }
        out.eigenvalues = vals;
        out.eigenvectors = vecs;
    }

    const double maxEv = out.eigenvalues(n - 1);
    const double minEv = out.eigenvalues(0);
    out.rankRatio = maxEv > 0.0 ? minEv / maxEv : 0.0;
    out.fullRank = minEv > 1e-10 * maxEv && minEv > 0.0;
    return out;
}

double mahalanobis(const Eigen::VectorXd& r, const SpectralDecomposition& spec) {
    if (r.size() != spec.dim()) throw DataError("vector dimension does not match decomposition");
    if (!spec.fullRank) {
        throw NumericalError(
            "Mahalanobis form needs a full-rank matrix; rank check failed (min/max eigenvalue "
            "ratio " +
            std::to_string(spec.rankRatio) + ")");
    }
    const Eigen::VectorXd rotated = spec.eigenvectors.transpose() * r;
    double sum = 0.0;
    for (int k = 0; k < spec.dim(); ++k) {
        sum += rotated(k) * rotated(k) / spec.eigenvalues(k);
    }
    return sum;
}

ShrinkageResult ledoitWolfShrink(const NormalizedPanel& panel, std::optional<double> forcedDelta) {
    if (panel.mode != NormalizationMode::MeanOnly) {
        throw DataError("Ledoit-Wolf shrinkage expects a mean-only panel, got " +
                        to_string(panel.mode));
    }
    const int K = panel.rows();
    const int T = panel.cols();
    if (T < 2) throw DataError("Ledoit-Wolf shrinkage needs T >= 2");

    const Eigen::MatrixXd& X = panel.values;
    const Eigen::MatrixXd S = X * X.transpose() / static_cast<double>(T);
    const double mu = S.trace() / static_cast<double>(K);

    Eigen::MatrixXd target = Eigen::MatrixXd::Zero(K, K);
    target.diagonal().setConstant(mu);

    // Dispersion of S around the scaled identity, and the estimation-error
    // estimate from the per-column outer products (Ledoit & Wolf 2004).
    const double d2 = (S - target).squaredNorm() / static_cast<double>(K);
    double sumNorm4 = 0.0;
    for (int t = 0; t < T; ++t) {
        const double n2 = X.col(t).squaredNorm();
        sumNorm4 += n2 * n2;
    }
    const double b2bar =
        (sumNorm4 / static_cast<double>(T) - S.squaredNorm()) /
        (static_cast<double>(K) * static_cast<double>(T));

    double deltaRaw;
    if (d2 > 0.0) {
        deltaRaw = std::min(b2bar, d2) / d2;
    } else {
        deltaRaw = 1.0;  // S equals the target; any delta is a fixed point
    }
    ShrinkageResult out;
    out.deltaRaw = deltaRaw;
    out.delta = forcedDelta ? std::clamp(*forcedDelta, 0.0, 1.0) : std::clamp(deltaRaw, 0.0, 1.0);

    out.shrunkCovariance.kind = MatrixKind::Covariance;
    out.shrunkCovariance.sliceId = panel.sliceId;
    out.shrunkCovariance.sampleColumns = T;
    out.shrunkCovariance.values = (1.0 - out.delta) * S + out.delta * target;

    out.shrunkCorrelation = correlationFromCovariance(out.shrunkCovariance);
    return out;
}

}  // namespace retmix
