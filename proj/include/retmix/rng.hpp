#pragma once

#include <cstdint>
#include <random>

namespace retmix {

/// splitmix64 step; used to derive per-stage seed streams from one master seed.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic seed for (master, stage, index). Documented fan-out rule:
/// three splitmix64 steps over master ^ golden-ratio-scrambled stage/index.
std::uint64_t deriveSeed(std::uint64_t master, std::uint64_t stage, std::uint64_t index = 0);

/// Seeded RNG with explicit sampling routines. All transforms are written
/// out here (Box-Muller, Marsaglia-Tsang, ...) so that a given seed yields
/// the same stream on every platform; only the mt19937_64 engine, whose
/// output sequence the standard fixes, is taken from <random>.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t nextU64() { return engine_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1); never returns 0.
    double uniformPositive() {
        double u;
        do {
            u = uniform();
        } while (u <= 0.0);
        return u;
    }

    /// Standard normal via Box-Muller, pairwise with a cached spare.
    double normal();

    /// Gamma(shape, scale) via Marsaglia-Tsang squeeze; shape > 0.
    double gamma(double shape, double scale);

    double chiSquared(double dof) { return gamma(0.5 * dof, 2.0); }

    double beta(double a, double b) {
        const double x = gamma(a, 1.0);
        const double y = gamma(b, 1.0);
        return x / (x + y);
    }

    /// Beta-prime: X/(1-X) with X ~ Beta(a, b); equivalently Gamma(a)/Gamma(b).
    double betaPrime(double a, double b) { return gamma(a, 1.0) / gamma(b, 1.0); }

    /// Student-t with dof degrees of freedom.
    double studentT(double dof) { return normal() / std::sqrt(chiSquared(dof) / dof); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool hasSpare_ = false;
};

}  // namespace retmix
