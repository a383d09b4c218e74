#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace retmix {

struct BinningRule {
    enum class Kind { Uniform, FreedmanDiaconis };
    Kind kind = Kind::Uniform;
    double lo = -5.0;
    double hi = 5.0;
    int count = 101;
    // Freedman-Diaconis: sample range is clipped to [clipLo, clipHi] first.
    double clipLo = -50.0;
    double clipHi = 50.0;

    static BinningRule uniform(double lo, double hi, int count);
    static BinningRule freedmanDiaconis(double clipLo, double clipHi);
};

/// Binned probability density: counts normalized so the densities integrate
/// to one over the binned range.
struct EmpiricalDensity {
    std::vector<double> edges;          // size B + 1, strictly increasing
    std::vector<double> density;        // size B
    std::vector<std::int64_t> counts;   // size B
    std::int64_t sampleCount = 0;
    std::string label;

    int binCount() const { return static_cast<int>(density.size()); }
    double center(int b) const { return 0.5 * (edges[static_cast<std::size_t>(b)] + edges[static_cast<std::size_t>(b) + 1]); }
    double width(int b) const { return edges[static_cast<std::size_t>(b) + 1] - edges[static_cast<std::size_t>(b)]; }

    void writeCsv(const std::string& path) const;
    static EmpiricalDensity readCsv(const std::string& path);
};

EmpiricalDensity estimateDensity(std::span<const double> samples, const BinningRule& rule,
                                 std::string label = {});

/// Default binning for fit inputs: uniform on [-Q, Q] with
/// Q = 1.05 * max|x| capped at 50, 201 bins.
BinningRule defaultFitBinning(std::span<const double> samples);

}  // namespace retmix
