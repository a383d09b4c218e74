#include "retmix/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "retmix/errors.hpp"
#include "retmix/quadrature.hpp"
#include "retmix/special.hpp"

namespace retmix {

// ---------------------------------------------------------------------------
// EpochKernel

EpochKernel::EpochKernel(Family family, double shape) : family_(family), shape_(shape) {
    if (family_ == Family::Algebraic) {
        if (!(shape > 1.5)) throw ConfigError("algebraic kernel requires l > 3/2");
        m_ = shape - 1.5;
        nu_ = 2.0 * shape - 1.0;
        logC_ = std::lgamma(shape) - std::lgamma(shape - 0.5) - 0.5 * std::log(2.0 * M_PI * m_);
    }
}

EpochKernel EpochKernel::gaussian() { return EpochKernel(Family::Gaussian, 0.0); }

EpochKernel EpochKernel::algebraic(double shape) { return EpochKernel(Family::Algebraic, shape); }

double EpochKernel::pdf(double x) const {
    if (family_ == Family::Gaussian) return normalPdf(x);
    return std::exp(logC_ - shape_ * std::log1p(x * x / (2.0 * m_)));
}

double EpochKernel::cdf(double x) const {
    if (family_ == Family::Gaussian) return normalCdf(x);
    return studentTCdf(x * std::sqrt(nu_ / (nu_ - 2.0)), nu_);
}

double EpochKernel::sample(Rng& rng) const {
    if (family_ == Family::Gaussian) return rng.normal();
    return rng.studentT(nu_) * std::sqrt((nu_ - 2.0) / nu_);
}

// ---------------------------------------------------------------------------
// EnsembleScaleLaw

EnsembleScaleLaw::EnsembleScaleLaw(Family family, double dof, double shape)
    : family_(family), dof_(dof), shape_(shape) {
    if (!(dof > 0.0)) throw ConfigError("ensemble dof N must be positive");
    if (family_ == Family::Gaussian) {
        logNorm_ = 0.5 * dof_ * std::log(0.5 * dof_) - std::lgamma(0.5 * dof_);
    } else {
        if (!(shape > 0.5 * dof + 1.0)) {
            throw ConfigError("algebraic ensemble requires L > N/2 + 1");
        }
        mPrime_ = shape_ - 0.5 * dof_ - 1.0;
        bCoef_ = dof_ / (2.0 * mPrime_);
        logNorm_ = 0.5 * dof_ * std::log(bCoef_) - logBeta(0.5 * dof_, shape_ - 0.5 * dof_);
    }
}

EnsembleScaleLaw EnsembleScaleLaw::gaussian(double dof) {
    return EnsembleScaleLaw(Family::Gaussian, dof, 0.0);
}

EnsembleScaleLaw EnsembleScaleLaw::algebraic(double dof, double shape) {
    return EnsembleScaleLaw(Family::Algebraic, dof, shape);
}

double EnsembleScaleLaw::logDensity(double u) const {
    if (u <= 0.0) return -std::numeric_limits<double>::infinity();
    if (family_ == Family::Gaussian) {
        return logNorm_ + (0.5 * dof_ - 1.0) * std::log(u) - 0.5 * dof_ * u;
    }
    return logNorm_ + (0.5 * dof_ - 1.0) * std::log(u) - shape_ * std::log1p(bCoef_ * u);
}

double EnsembleScaleLaw::density(double u) const { return std::exp(logDensity(u)); }

double EnsembleScaleLaw::sample(Rng& rng) const {
    if (family_ == Family::Gaussian) return rng.gamma(0.5 * dof_, 2.0 / dof_);
    return rng.betaPrime(0.5 * dof_, shape_ - 0.5 * dof_) / bCoef_;
}

std::pair<double, double> EnsembleScaleLaw::logScaleBounds() const {
    // Left: density ~ u^{N/2} in the integrated sense; suppress below e^-92.
    const double sLo = -(2.0 / dof_) * 95.0 - 8.0;
    double sHi;
    if (family_ == Family::Gaussian) {
        // Right: exp(-N u / 2) dominates.
        sHi = std::max(6.0, std::log(200.0 / dof_) + 2.0);
    } else {
        // Right: power-law decay with rate m' in s = ln u.
        sHi = std::min(std::max(8.0, 95.0 / mPrime_ + 5.0), 20000.0);
    }
    return {sLo, sHi};
}

std::vector<double> EnsembleScaleLaw::logScaleSeeds() const {
    std::vector<double> seeds = {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0};
    const auto [lo, hi] = logScaleBounds();
    for (double s = 8.0; s < hi; s *= 2.5) seeds.push_back(s);
    for (double s = -16.0; s > lo; s *= 2.5) seeds.push_back(s);
    return seeds;
}

// ---------------------------------------------------------------------------
// ModelDistribution

ModelDistribution::ModelDistribution(EpochKernel kernel) : kernel_(kernel) {}

ModelDistribution::ModelDistribution(EpochKernel kernel, EnsembleScaleLaw ensemble)
    : kernel_(kernel), ensemble_(ensemble) {}

namespace {

constexpr QuadratureOptions kPdfQuadrature{1e-8, 0.0, 10000};

std::vector<double> seedsWithX(const EnsembleScaleLaw& law, double absX) {
    std::vector<double> seeds = law.logScaleSeeds();
    if (absX > 0.0) {
        // The kernel factor varies on the scale u ~ x^2; make sure the
        // integrator starts with a node there.
        const double s = 2.0 * std::log(absX);
        seeds.push_back(s);
        seeds.push_back(s - 2.0);
        seeds.push_back(s + 2.0);
    }
    return seeds;
}

}  // namespace

double ModelDistribution::pdf(double x) const {
    const double ax = std::fabs(x);
    if (!ensemble_) return kernel_.pdf(ax);
    if (singularAtZero() && ax == 0.0) return std::numeric_limits<double>::infinity();
    const EnsembleScaleLaw& law = *ensemble_;
    const auto [sLo, sHi] = law.logScaleBounds();
    const auto seeds = seedsWithX(law, ax);
    const auto integrand = [&](double s) {
        const double u = std::exp(s);
        const double lg = law.logDensity(u) + 0.5 * s;
        if (lg < -745.0) return 0.0;
        return std::exp(lg) * kernel_.pdf(ax * std::exp(-0.5 * s));
    };
    return integrateOrThrow(integrand, sLo, sHi, kPdfQuadrature, seeds);
}

double ModelDistribution::cdf(double x) const {
    if (!ensemble_) return kernel_.cdf(x);
    const EnsembleScaleLaw& law = *ensemble_;
    const auto [sLo, sHi] = law.logScaleBounds();
    const auto seeds = seedsWithX(law, std::fabs(x));
    const auto integrand = [&](double s) {
        const double u = std::exp(s);
        const double lg = law.logDensity(u) + s;
        if (lg < -745.0) return 0.0;
        return std::exp(lg) * kernel_.cdf(x * std::exp(-0.5 * s));
    };
    return std::clamp(integrateOrThrow(integrand, sLo, sHi, kPdfQuadrature, seeds), 0.0, 1.0);
}

double ModelDistribution::binAverage(double lo, double hi) const {
    if (!(hi > lo)) throw ConfigError("bin average needs hi > lo");
    return (cdf(hi) - cdf(lo)) / (hi - lo);
}

std::vector<double> ModelDistribution::sample(std::size_t n, Rng& rng) const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = ensemble_ ? ensemble_->sample(rng) : 1.0;
        out[i] = std::sqrt(u) * kernel_.sample(rng);
    }
    return out;
}

std::vector<double> ModelDistribution::sample(std::size_t n, std::uint64_t seed) const {
    Rng rng(seed);
    return sample(n, rng);
}

std::string ModelDistribution::label() const {
    std::string s = kernel_.isGaussian() ? "G" : "A";
    if (ensemble_) s += ensemble_->family() == EnsembleScaleLaw::Family::Gaussian ? "G" : "A";
    return s;
}

namespace {

// 15-point Gauss-Legendre nodes/weights on [-1, 1] for the fixed panels of
// the batched evaluator.
constexpr double kGl15Nodes[15] = {
    -0.987992518020485428486, -0.937273392400705904308, -0.848206583410427216201,
    -0.724417731360170047416, -0.570972172608538847537, -0.394151347077563369897,
    -0.201194093997434522301, 0.0,                       0.201194093997434522301,
    0.394151347077563369897,  0.570972172608538847537,  0.724417731360170047416,
    0.848206583410427216201,  0.937273392400705904308,  0.987992518020485428486};
constexpr double kGl15Weights[15] = {
    0.030753241996117268355, 0.070366047488108124709, 0.107159220467171935012,
    0.139570677926154314447, 0.166269205816993933553, 0.186161000015562211027,
    0.198431485327111576456, 0.202578241925561272880, 0.198431485327111576456,
    0.186161000015562211027, 0.166269205816993933553, 0.139570677926154314447,
    0.107159220467171935012, 0.070366047488108124709, 0.030753241996117268355};

}  // namespace

std::vector<double> pdfGrid(const ModelDistribution& model, std::span<const double> xs) {
    std::vector<double> out(xs.size());
    if (!model.compound()) {
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = model.kernel().pdf(std::fabs(xs[i]));
        return out;
    }
    const EnsembleScaleLaw& law = *model.ensemble();
    const auto [sLo, sHi] = law.logScaleBounds();

    // Panel knots: coarse in the far tails of the scale law, unit-width where
    // both the scale density and the kernel factor can vary.
    std::vector<double> knots;
    knots.push_back(sLo);
    for (double s = -60.0; s < -14.0; s += 8.0) {
        if (s > sLo) knots.push_back(s);
    }
    for (double s = -14.0; s <= 14.0; s += 1.0) {
        if (s > sLo && s < sHi) knots.push_back(s);
    }
    for (double s = 16.0; s < sHi; s *= 1.35) knots.push_back(s);
    knots.push_back(sHi);
    std::sort(knots.begin(), knots.end());

    // Shared scale-law factor at every node.
    std::vector<double> nodes;
    std::vector<double> weights;
    nodes.reserve((knots.size() - 1) * 15);
    for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
        const double a = knots[seg];
        const double b = knots[seg + 1];
        if (!(b > a)) continue;
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        for (int j = 0; j < 15; ++j) {
            nodes.push_back(mid + half * kGl15Nodes[j]);
            weights.push_back(half * kGl15Weights[j]);
        }
    }
    std::vector<double> lawFactor(nodes.size());
    std::vector<double> invRootU(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double s = nodes[j];
        const double lg = law.logDensity(std::exp(s)) + 0.5 * s;
        lawFactor[j] = lg > -745.0 ? weights[j] * std::exp(lg) : 0.0;
        invRootU[j] = std::exp(-0.5 * s);
    }

    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double ax = std::fabs(xs[i]);
        if (model.singularAtZero() && ax == 0.0) {
            out[i] = std::numeric_limits<double>::infinity();
            continue;
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            if (lawFactor[j] == 0.0) continue;
            sum += lawFactor[j] * model.kernel().pdf(ax * invRootU[j]);
        }
        out[i] = sum;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Interval families

std::string to_string(IntervalFamily family) {
    switch (family) {
        case IntervalFamily::GG: return "GG";
        case IntervalFamily::GA: return "GA";
        case IntervalFamily::AG: return "AG";
        case IntervalFamily::AA: return "AA";
    }
    return "?";
}

IntervalFamily intervalFamilyFromString(const std::string& s) {
    if (s == "GG" || s == "gg") return IntervalFamily::GG;
    if (s == "GA" || s == "ga") return IntervalFamily::GA;
    if (s == "AG" || s == "ag") return IntervalFamily::AG;
    if (s == "AA" || s == "aa") return IntervalFamily::AA;
    throw ConfigError("unknown interval family: " + s);
}

bool familyHasAlgebraicKernel(IntervalFamily family) {
    return family == IntervalFamily::AG || family == IntervalFamily::AA;
}

bool familyHasAlgebraicEnsemble(IntervalFamily family) {
    return family == IntervalFamily::GA || family == IntervalFamily::AA;
}

ModelDistribution makeIntervalModel(IntervalFamily family, double l, double dof, double shape) {
    const EpochKernel kernel =
        familyHasAlgebraicKernel(family) ? EpochKernel::algebraic(l) : EpochKernel::gaussian();
    const EnsembleScaleLaw law = familyHasAlgebraicEnsemble(family)
                                     ? EnsembleScaleLaw::algebraic(dof, shape)
                                     : EnsembleScaleLaw::gaussian(dof);
    return ModelDistribution(kernel, law);
}

// ---------------------------------------------------------------------------
// Synthetic panel generator

Eigen::MatrixXd oneFactorCorrelation(int K, double rho) {
    if (K < 1) throw ConfigError("correlation dimension must be positive");
    if (rho < 0.0 || rho >= 1.0) throw ConfigError("one-factor loading must lie in [0, 1)");
    Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(K, K, rho);
    corr.diagonal().setOnes();
    return corr;
}

ReturnPanel synthesizePanel(const Eigen::MatrixXd& targetCorr, const EpochKernel& kernel,
                            const std::optional<EnsembleScaleLaw>& ensemble, int epochs,
                            int columnsPerEpoch, std::uint64_t seed) {
    const int K = static_cast<int>(targetCorr.rows());
    if (targetCorr.cols() != K || K < 1) throw ConfigError("target correlation must be square");
    if (epochs < 1 || columnsPerEpoch < 1) throw ConfigError("epochs and columns must be positive");

    Eigen::LLT<Eigen::MatrixXd> targetChol(targetCorr);
    if (targetChol.info() != Eigen::Success) {
        throw NumericalError("target correlation matrix is not positive definite");
    }
    const Eigen::MatrixXd L = targetChol.matrixL();

    int wishartColumns = 0;
    if (ensemble) {
        wishartColumns = static_cast<int>(std::llround(ensemble->dof()));
        if (wishartColumns < K) {
            throw DataError("ensemble dof N = " + std::to_string(ensemble->dof()) +
                            " below panel dimension K = " + std::to_string(K) +
                            ": epoch matrices would be rank deficient");
        }
    }

    const double nu = kernel.isGaussian() ? 0.0 : 2.0 * kernel.shape() - 1.0;

    ReturnPanel panel;
    panel.tickers.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "S%03d", k);
        panel.tickers.emplace_back(buf);
    }
    panel.deltaSeconds = 1.0;
    panel.deltaLabel = "synth";
    panel.returns.resize(K, epochs * columnsPerEpoch);

    for (int e = 0; e < epochs; ++e) {
        Rng rng(deriveSeed(seed, 0x53594e54ULL /* "SYNT" */, static_cast<std::uint64_t>(e)));

        Eigen::MatrixXd epochChol = L;
        if (ensemble) {
            Eigen::MatrixXd A(K, wishartColumns);
            for (int j = 0; j < wishartColumns; ++j) {
                Eigen::VectorXd z(K);
                for (int k = 0; k < K; ++k) z(k) = rng.normal();
                A.col(j) = L.triangularView<Eigen::Lower>() * z;
                if (ensemble->family() == EnsembleScaleLaw::Family::Algebraic) {
                    A.col(j) *= std::sqrt(ensemble->sample(rng));
                }
            }
            const Eigen::MatrixXd epochCov = A * A.transpose() / static_cast<double>(wishartColumns);
            Eigen::LLT<Eigen::MatrixXd> llt(epochCov);
            if (llt.info() != Eigen::Success) {
                throw NumericalError("epoch covariance draw lost positive definiteness");
            }
            epochChol = llt.matrixL();
        }

        const int offset = e * columnsPerEpoch;
        Eigen::VectorXd z(K);
        for (int t = 0; t < columnsPerEpoch; ++t) {
            for (int k = 0; k < K; ++k) z(k) = rng.normal();
            Eigen::VectorXd x = epochChol.triangularView<Eigen::Lower>() * z;
            if (!kernel.isGaussian()) {
                // Shared per-vector scale keeps the multivariate family
                // elliptical, so each rotated component stays in the
                // univariate algebraic family.
                const double w = rng.chiSquared(nu);
                x *= std::sqrt((nu - 2.0) / w);
            }
            panel.returns.col(offset + t) = x;
        }
        panel.segments.emplace_back(offset, offset + columnsPerEpoch);
    }
    return panel;
}

}  // namespace retmix
