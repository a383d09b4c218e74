#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "retmix/panel.hpp"
#include "retmix/rng.hpp"

namespace retmix {

/// Univariate epoch distribution of rescaled rotated returns: standard
/// normal, or the unit-variance algebraic family
///   f(x; l) = c(l) (1 + x^2 / (2m))^{-l},  m = l - 3/2,
///   c(l) = Gamma(l) / (Gamma(l - 1/2) sqrt(2 pi m)),
/// whose tail decays like |x|^{-2l}. Requires l > 3/2 for unit variance.
class EpochKernel {
public:
    enum class Family { Gaussian, Algebraic };

    static EpochKernel gaussian();
    static EpochKernel algebraic(double shape);

    Family family() const { return family_; }
    double shape() const { return shape_; }
    bool isGaussian() const { return family_ == Family::Gaussian; }

    double pdf(double x) const;
    double cdf(double x) const;
    double sample(Rng& rng) const;

private:
    EpochKernel(Family family, double shape);
    Family family_;
    double shape_ = 0.0;   // l
    double m_ = 0.0;       // l - 3/2
    double logC_ = 0.0;    // ln c(l)
    double nu_ = 0.0;      // 2l - 1
};

/// Distribution of the random variance scale u > 0 induced by fluctuating
/// correlation matrices; mean is 1 in both variants.
///   Gaussian(N):      u ~ chi^2_N / N
///   Algebraic(N, L):  g(u) = c' u^{N/2-1} (1 + N u / (2m'))^{-L},
///                     m' = L - N/2 - 1 > 0 (gives E[u] = 1)
class EnsembleScaleLaw {
public:
    enum class Family { Gaussian, Algebraic };

    static EnsembleScaleLaw gaussian(double dof);
    static EnsembleScaleLaw algebraic(double dof, double shape);

    Family family() const { return family_; }
    double dof() const { return dof_; }      // N
    double shape() const { return shape_; }  // L (algebraic only)

    double logDensity(double u) const;
    double density(double u) const;
    double sample(Rng& rng) const;

    /// Integration window in s = ln u outside which the scale density is
    /// negligible, plus interior seed points for the adaptive integrator.
    std::pair<double, double> logScaleBounds() const;
    std::vector<double> logScaleSeeds() const;

private:
    EnsembleScaleLaw(Family family, double dof, double shape);
    Family family_;
    double dof_;
    double shape_;
    double mPrime_ = 0.0;
    double bCoef_ = 0.0;
    double logNorm_ = 0.0;
};

/// Epoch kernel, optionally compounded with an ensemble scale law:
///   <p>(x) = integral_0^inf g(u) u^{-1/2} f(x / sqrt(u)) du.
/// Unit variance and even symmetry by construction. For ensembles with
/// N <= 1 the compound density diverges (integrably) at x = 0.
class ModelDistribution {
public:
    explicit ModelDistribution(EpochKernel kernel);
    ModelDistribution(EpochKernel kernel, EnsembleScaleLaw ensemble);

    const EpochKernel& kernel() const { return kernel_; }
    const std::optional<EnsembleScaleLaw>& ensemble() const { return ensemble_; }
    bool compound() const { return ensemble_.has_value(); }
    bool singularAtZero() const { return ensemble_ && ensemble_->dof() <= 1.0; }

    double pdf(double x) const;
    double cdf(double x) const;
    /// Bin-averaged density (cdf difference over width); finite even across
    /// the x = 0 singularity of small-N ensembles.
    double binAverage(double lo, double hi) const;

    std::vector<double> sample(std::size_t n, Rng& rng) const;
    std::vector<double> sample(std::size_t n, std::uint64_t seed) const;

    std::string label() const;

private:
    EpochKernel kernel_;
    std::optional<EnsembleScaleLaw> ensemble_;
};

enum class IntervalFamily { GG, GA, AG, AA };

std::string to_string(IntervalFamily family);
IntervalFamily intervalFamilyFromString(const std::string& s);
bool familyHasAlgebraicKernel(IntervalFamily family);
bool familyHasAlgebraicEnsemble(IntervalFamily family);

/// Assemble one of the four long-interval families. `l` is used by AG/AA,
/// `shape` (L) by GA/AA.
ModelDistribution makeIntervalModel(IntervalFamily family, double l, double dof, double shape);

/// Batched pdf evaluation on a grid. For compound models the ensemble nodes
/// are shared across all abscissas (fixed composite Gauss-Kronrod panels),
/// which is what the fit objectives use; it matches the adaptive route to
/// better than 1e-7 relative (pinned by tests). Singular points (x = 0 with
/// N <= 1) come back as +inf, as in pdf().
std::vector<double> pdfGrid(const ModelDistribution& model, std::span<const double> xs);

/// Draw a synthetic return panel: per epoch, an epoch correlation matrix is
/// drawn around `targetCorr` (Wishart-type construction controlled by the
/// ensemble; ensemble absent = fixed correlation), then `columnsPerEpoch`
/// return vectors are drawn from the kernel with that correlation.
ReturnPanel synthesizePanel(const Eigen::MatrixXd& targetCorr, const EpochKernel& kernel,
                            const std::optional<EnsembleScaleLaw>& ensemble, int epochs,
                            int columnsPerEpoch, std::uint64_t seed);

/// K x K one-factor correlation matrix with common loading `rho` (identity
/// when rho = 0); convenient target for synthetic studies.
Eigen::MatrixXd oneFactorCorrelation(int K, double rho);

}  // namespace retmix
