#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "retmix/density.hpp"
#include "retmix/errors.hpp"
#include "retmix/fitting.hpp"
#include "retmix/models.hpp"
#include "retmix/rng.hpp"

using namespace retmix;

namespace {

// Noise-free density: the model's own curve on a uniform grid, with counts
// large enough that every bin passes the log-objective threshold.
EmpiricalDensity exactDensity(const ModelDistribution& model, double q, int bins) {
    EmpiricalDensity d;
    d.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) d.edges[static_cast<std::size_t>(b)] = -q + 2.0 * q * b / bins;
    std::vector<double> centers(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b) centers[static_cast<std::size_t>(b)] = 0.5 * (d.edges[static_cast<std::size_t>(b)] + d.edges[static_cast<std::size_t>(b) + 1]);
    d.density = pdfGrid(model, centers);
    d.counts.assign(static_cast<std::size_t>(bins), 1000);
    d.sampleCount = 1000 * bins;
    return d;
}

EmpiricalDensity sampledDensity(const ModelDistribution& model, std::size_t n, std::uint64_t seed) {
    const auto samples = model.sample(n, seed);
    return estimateDensity(samples, defaultFitBinning(samples));
}

}  // namespace

TEST_CASE("batched pdf grid matches the adaptive quadrature") {
    std::vector<double> xs;
    for (double x = 0.0; x <= 12.0; x += 0.37) xs.push_back(x);
    const std::vector<ModelDistribution> models = {
        makeIntervalModel(IntervalFamily::GG, 0.0, 5.0, 0.0),
        makeIntervalModel(IntervalFamily::GG, 0.0, 0.7, 0.0),
        makeIntervalModel(IntervalFamily::GA, 0.0, 2.438, 3.467),
        makeIntervalModel(IntervalFamily::AG, 2.6, 6.0, 0.0),
        makeIntervalModel(IntervalFamily::AA, 2.6, 6.0, 12.0),
        makeIntervalModel(IntervalFamily::AA, 1.7, 2.0, 99.5),
    };
    for (const auto& model : models) {
        const auto batched = pdfGrid(model, xs);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (model.singularAtZero() && xs[i] == 0.0) {
                CHECK(std::isinf(batched[i]));
                continue;
            }
            const double adaptive = model.pdf(xs[i]);
            CHECK(std::fabs(batched[i] - adaptive) <= 1e-7 * std::max(adaptive, 1e-300));
        }
    }
}

TEST_CASE("chi^2 conventions") {
    const auto model = ModelDistribution(EpochKernel::algebraic(2.5));
    const auto density = exactDensity(model, 6.0, 101);
    const auto curve = modelCurve(model, density);
    CHECK(chiSquared(density, curve, FitScale::Linear, 1, 10) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(chiSquared(density, curve, FitScale::Log, 1, 10) == doctest::Approx(0.0).epsilon(1e-14));

    // doubling every residual quadruples the statistic
    auto off = curve;
    for (auto& v : off) v *= 1.01;
    auto off2 = curve;
    for (auto& v : off2) v *= 1.02;
    const double c1 = chiSquared(density, off, FitScale::Linear, 1, 10);
    const double c2 = chiSquared(density, off2, FitScale::Linear, 1, 10);
    CHECK(c2 == doctest::Approx(4.0 * c1).epsilon(1e-3));

    // too few usable bins
    EmpiricalDensity tiny = density;
    for (auto& c : tiny.counts) c = 0;
    CHECK_THROWS_AS(static_cast<void>(chiSquared(tiny, curve, FitScale::Log, 1, 10)), DataError);
}

TEST_CASE("noise-free fits recover parameters identically on both scales") {
    // epoch kernel
    const auto density = exactDensity(ModelDistribution(EpochKernel::algebraic(2.7)), 8.0, 161);
    const auto lin = fitEpoch(density, FitScale::Linear);
    const auto log = fitEpoch(density, FitScale::Log);
    CHECK(lin.param("l") == doctest::Approx(2.7).epsilon(1e-5));
    CHECK(log.param("l") == doctest::Approx(2.7).epsilon(1e-5));
    CHECK(lin.param("l") == doctest::Approx(log.param("l")).epsilon(1e-5));
    CHECK(lin.chiSquared < 1e-12);
    CHECK_FALSE(lin.anyBoundary());

    // GG: one-parameter interval family
    const auto gg = exactDensity(makeIntervalModel(IntervalFamily::GG, 0.0, 5.0, 0.0), 8.0, 161);
    const auto ggLin = fitInterval(gg, IntervalFamily::GG, std::nullopt, FitScale::Linear);
    const auto ggLog = fitInterval(gg, IntervalFamily::GG, std::nullopt, FitScale::Log);
    CHECK(ggLin.param("N") == doctest::Approx(5.0).epsilon(2e-4));
    CHECK(ggLog.param("N") == doctest::Approx(5.0).epsilon(2e-4));
    CHECK(ggLin.param("N") == doctest::Approx(ggLog.param("N")).epsilon(2e-4));

    // AA: two parameters with the documented flat valley in L
    const auto aa = exactDensity(makeIntervalModel(IntervalFamily::AA, 2.6, 6.0, 12.0), 10.0, 161);
    const auto aaLin = fitInterval(aa, IntervalFamily::AA, 2.6, FitScale::Linear);
    const auto aaLog = fitInterval(aa, IntervalFamily::AA, 2.6, FitScale::Log);
    CHECK(aaLin.param("N") == doctest::Approx(6.0).epsilon(0.01));
    CHECK(aaLog.param("N") == doctest::Approx(6.0).epsilon(0.01));
    CHECK(aaLin.param("L") == doctest::Approx(12.0).epsilon(0.05));
    CHECK(aaLog.param("L") == doctest::Approx(12.0).epsilon(0.05));
}

TEST_CASE("fits on sampled synthetic densities recover the generator") {
    // algebraic epoch kernel, l = 2.7
    const auto epochDensity =
        sampledDensity(ModelDistribution(EpochKernel::algebraic(2.7)), 400000, 31);
    for (FitScale scale : {FitScale::Log, FitScale::Linear}) {
        const auto fit = fitEpoch(epochDensity, scale);
        CHECK(fit.param("l") > 2.55);
        CHECK(fit.param("l") < 2.85);
    }

    // Gaussian synthetic: l runs into the upper bound with a boundary flag
    const auto gaussDensity =
        sampledDensity(ModelDistribution(EpochKernel::gaussian()), 200000, 32);
    const auto gauss = fitEpoch(gaussDensity, FitScale::Log);
    CHECK(gauss.boundaryFlags.at("l"));
    CHECK(gauss.param("l") > 40.0);

    // AG with the kernel shape fixed; inverse-variance weighting keeps the
    // sparse tail bins from steering N (the unweighted default scatters by
    // roughly +-20% at this sample size, matching the spread between the
    // published lin and log columns)
    const auto agModel = makeIntervalModel(IntervalFamily::AG, 2.6, 6.0, 0.0);
    const auto agSamples = agModel.sample(400000, 33);
    const auto agDensity = estimateDensity(agSamples, BinningRule::uniform(-12.0, 12.0, 241));
    FitConfig weighted;
    weighted.weighted = true;
    const auto ag = fitInterval(agDensity, IntervalFamily::AG, 2.6, FitScale::Log, weighted);
    CHECK(ag.param("N") > 6.0 * 0.85);
    CHECK(ag.param("N") < 6.0 * 1.15);
    CHECK_THROWS_AS(
        static_cast<void>(fitInterval(agDensity, IntervalFamily::AG, std::nullopt, FitScale::Log)),
        ConfigError);
}

TEST_CASE("model exclusion logic: GG fits heavy-tailed data worse than AA") {
    const auto density =
        sampledDensity(makeIntervalModel(IntervalFamily::AA, 2.6, 6.0, 12.0), 400000, 35);
    const auto gg = fitInterval(density, IntervalFamily::GG, std::nullopt, FitScale::Log);
    const auto aa = fitInterval(density, IntervalFamily::AA, 2.6, FitScale::Log);
    CHECK(gg.chiSquared > aa.chiSquared);
}

TEST_CASE("optimality sanity: the fitted N beats a fixed wrong N on its own objective") {
    const auto density =
        sampledDensity(makeIntervalModel(IntervalFamily::GG, 0.0, 5.0, 0.0), 300000, 36);
    const auto fit = fitInterval(density, IntervalFamily::GG, std::nullopt, FitScale::Log);
    const auto wrong = makeIntervalModel(IntervalFamily::GG, 0.0, 50.0, 0.0);
    const double chiWrong = chiSquared(density, modelCurve(wrong, density), FitScale::Log, 1, 10);
    CHECK(fit.chiSquared < chiWrong);
}

TEST_CASE("epoch parameter averaging") {
    std::vector<FitResult> fits;
    for (double l : {2.769, 2.933, 2.679}) {
        FitResult r;
        r.family = "A";
        r.scale = FitScale::Log;
        r.parameters["l"] = l;
        r.chiSquared = 0.01;
        r.deltaLabel = "1s";
        fits.push_back(r);
    }
    const auto avg = averageEpochParams(fits);
    CHECK(avg.meanShape == doctest::Approx(2.79366666666667).epsilon(1e-10));
    CHECK(avg.count == 3);

    const auto single = averageEpochParams({fits[0]});
    CHECK(single.meanShape == doctest::Approx(2.769));

    auto mixed = fits;
    mixed[1].scale = FitScale::Linear;
    CHECK_THROWS_AS(static_cast<void>(averageEpochParams(mixed)), DataError);
}

TEST_CASE("tail exponents recover power laws") {
    Rng rng(2718);
    // symmetrized Pareto with pdf ~ |x|^-4 beyond 1
    std::vector<double> pareto(400000);
    for (auto& x : pareto) {
        const double u = rng.uniformPositive();
        const double mag = std::pow(u, -1.0 / 3.0);
        x = rng.uniform() < 0.5 ? -mag : mag;
    }
    const auto density = estimateDensity(pareto, defaultFitBinning(pareto));
    const auto slopes = tailExponent(density, 0.95, 0.999);
    CHECK(slopes.positive > -4.3);
    CHECK(slopes.positive < -3.7);
    CHECK(slopes.negative > -4.3);
    CHECK(slopes.negative < -3.7);

    // standard normal: no power law, much steeper than -6 in that window
    std::vector<double> normal(400000);
    for (auto& x : normal) x = rng.normal();
    const auto nd = estimateDensity(normal, BinningRule::uniform(-6.0, 6.0, 201));
    const auto ns = tailExponent(nd, 0.95, 0.999);
    CHECK(ns.positive < -6.0);
    CHECK(ns.negative < -6.0);

    // algebraic kernel l = 2: pdf tail |x|^-4
    const ModelDistribution alg(EpochKernel::algebraic(2.0));
    const auto as = alg.sample(1000000, 93);
    const auto ad = estimateDensity(as, defaultFitBinning(as));
    const auto aslopes = tailExponent(ad, 0.99, 0.9995);
    CHECK(aslopes.positive > -4.35);
    CHECK(aslopes.positive < -3.65);

    // window so narrow that fewer than 5 bins survive per sign
    CHECK_THROWS_AS(static_cast<void>(tailExponent(nd, 0.9999, 0.99995)), DataError);
}

TEST_CASE("fit results serialize to json and back") {
    FitResult r;
    r.family = "AA";
    r.scale = FitScale::Log;
    r.parameters = {{"l", 2.6}, {"N", 6.0}, {"L", 12.0}};
    r.chiSquared = 0.004;
    r.binsUsed = 88;
    r.boundaryFlags = {{"N", false}, {"L", true}};
    r.deltaLabel = "10s";
    r.sliceLabel = "interval 8";
    const auto back = FitResult::fromJsonText(r.toJson());
    CHECK(back.family == "AA");
    CHECK(back.scale == FitScale::Log);
    CHECK(back.param("N") == doctest::Approx(6.0));
    CHECK(back.boundaryFlags.at("L"));
    CHECK(back.sliceLabel == "interval 8");
    const auto model = back.model();
    CHECK(model.compound());
}
