#include "retmix/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "retmix/errors.hpp"
#include "retmix/stats.hpp"

namespace retmix {

BinningRule BinningRule::uniform(double lo, double hi, int count) {
    if (!(hi > lo) || count < 1) throw ConfigError("uniform binning needs hi > lo and count >= 1");
    BinningRule r;
    r.kind = Kind::Uniform;
    r.lo = lo;
    r.hi = hi;
    r.count = count;
    return r;
}

BinningRule BinningRule::freedmanDiaconis(double clipLo, double clipHi) {
    if (!(clipHi > clipLo)) throw ConfigError("freedman-diaconis clip range needs hi > lo");
    BinningRule r;
    r.kind = Kind::FreedmanDiaconis;
    r.clipLo = clipLo;
    r.clipHi = clipHi;
    return r;
}

EmpiricalDensity estimateDensity(std::span<const double> samples, const BinningRule& rule,
                                 std::string label) {
    if (samples.size() < 100) {
        throw DataError("density estimation needs at least 100 samples, got " +
                        std::to_string(samples.size()));
    }
    const auto [minIt, maxIt] = std::minmax_element(samples.begin(), samples.end());
    if (*minIt == *maxIt) throw DataError("all samples identical: zero-width support");

    double lo;
    double hi;
    int count;
    if (rule.kind == BinningRule::Kind::Uniform) {
        lo = rule.lo;
        hi = rule.hi;
        count = rule.count;
    } else {
        std::vector<double> sorted(samples.begin(), samples.end());
        std::sort(sorted.begin(), sorted.end());
        const double iqr = sortedQuantile(sorted, 0.75) - sortedQuantile(sorted, 0.25);
        lo = std::max(sorted.front(), rule.clipLo);
        hi = std::min(sorted.back(), rule.clipHi);
        if (!(hi > lo)) throw DataError("freedman-diaconis range collapsed after clipping");
        const double width = 2.0 * iqr / std::cbrt(static_cast<double>(samples.size()));
        count = width > 0.0 ? std::max(1, static_cast<int>(std::ceil((hi - lo) / width))) : 1;
        count = std::min(count, 100000);
    }

    EmpiricalDensity out;
    out.label = std::move(label);
    out.edges.resize(static_cast<std::size_t>(count) + 1);
    const double step = (hi - lo) / count;
    for (int b = 0; b <= count; ++b) out.edges[static_cast<std::size_t>(b)] = lo + step * b;
    out.edges.back() = hi;
    out.counts.assign(static_cast<std::size_t>(count), 0);
    out.density.assign(static_cast<std::size_t>(count), 0.0);

    std::int64_t inRange = 0;
    for (double x : samples) {
        if (x < lo || x > hi) continue;
        int b = static_cast<int>((x - lo) / step);
        if (b == count) b = count - 1;  // right edge inclusive
        ++out.counts[static_cast<std::size_t>(b)];
        ++inRange;
    }
    out.sampleCount = inRange;
    if (inRange == 0) throw DataError("no samples fall inside the binning range");
    for (int b = 0; b < count; ++b) {
        out.density[static_cast<std::size_t>(b)] =
            static_cast<double>(out.counts[static_cast<std::size_t>(b)]) /
            (static_cast<double>(inRange) * out.width(b));
    }
    return out;
}

BinningRule defaultFitBinning(std::span<const double> samples) {
    double maxAbs = 0.0;
    for (double x : samples) maxAbs = std::max(maxAbs, std::fabs(x));
    const double q = std::min(1.05 * maxAbs, 50.0);
    if (q <= 0.0) throw DataError("cannot derive fit binning from all-zero samples");
    return BinningRule::uniform(-q, q, 201);
}

void EmpiricalDensity::writeCsv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "bin_left,bin_right,density,count\n";
    char buf[128];
    for (int b = 0; b < binCount(); ++b) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%lld\n", edges[static_cast<std::size_t>(b)],
                      edges[static_cast<std::size_t>(b) + 1], density[static_cast<std::size_t>(b)],
                      static_cast<long long>(counts[static_cast<std::size_t>(b)]));
        out << buf;
    }
}

EmpiricalDensity EmpiricalDensity::readCsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open density file " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty density file " + path);
    EmpiricalDensity out;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string f0, f1, f2, f3;
        if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') || !std::getline(ss, f2, ',') ||
            !std::getline(ss, f3, ',')) {
            throw DataError("malformed density row in " + path + ": " + line);
        }
        const double left = std::stod(f0);
        const double right = std::stod(f1);
        if (first) {
            out.edges.push_back(left);
            first = false;
        }
        out.edges.push_back(right);
        out.density.push_back(std::stod(f2));
        out.counts.push_back(std::stoll(f3));
    }
    if (out.density.empty()) throw DataError("density file has no bins: " + path);
    for (auto c : out.counts) out.sampleCount += c;
    return out;
}

}  // namespace retmix
