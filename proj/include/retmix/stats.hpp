#pragma once

#include <functional>
#include <span>
#include <vector>

namespace retmix {

double mean(std::span<const double> xs);
double populationVariance(std::span<const double> xs);
double secondMoment(std::span<const double> xs);

/// Unbiased sample excess kurtosis (G2).
double excessKurtosis(std::span<const double> xs);

/// Quantile of a sorted sample, linear interpolation between order statistics.
double sortedQuantile(std::span<const double> sorted, double q);

/// One-sample Kolmogorov-Smirnov statistic against a CDF; sorts a copy.
double ksStatistic(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov statistic; sorts copies.
double ksStatisticTwoSample(std::span<const double> a, std::span<const double> b);

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorovSurvival(double lambda);

/// Approximate two-sample KS p-value (asymptotic with small-sample correction).
double ksTwoSamplePValue(double d, std::size_t n, std::size_t m);

}  // namespace retmix
