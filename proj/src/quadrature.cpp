#include "retmix/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include "retmix/errors.hpp"

namespace retmix {

namespace {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
constexpr double kNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b;
    double value;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

Segment evaluateSegment(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double halfWidth = 0.5 * (b - a);
    double kronrod = 0.0;
    double gauss = 0.0;
    for (int i = 0; i < 8; ++i) {
        double fsum;
        if (i == 7) {
            fsum = f(center);
            gauss += kGaussWeights[3] * fsum;
        } else {
            fsum = f(center - halfWidth * kNodes[i]) + f(center + halfWidth * kNodes[i]);
            if (i % 2 == 1) gauss += kGaussWeights[i / 2] * fsum;
        }
        kronrod += kWeights[i] * fsum;
    }
    kronrod *= halfWidth;
    gauss *= halfWidth;
    const double err = std::pow(200.0 * std::fabs(kronrod - gauss), 1.5);
    return Segment{a, b, kronrod, std::min(err, std::fabs(kronrod - gauss) * 200.0)};
}

}  // namespace

QuadratureOutcome adaptiveIntegrate(const std::function<double(double)>& f, double lo, double hi,
                                    const QuadratureOptions& opts, std::span<const double> seeds) {
    std::vector<double> cuts;
    cuts.push_back(lo);
    for (double s : seeds) {
        if (s > lo && s < hi) cuts.push_back(s);
    }
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());

    std::priority_queue<Segment> queue;
    double total = 0.0;
    double totalError = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Segment seg = evaluateSegment(f, cuts[i], cuts[i + 1]);
        total += seg.value;
        totalError += seg.error;
        queue.push(seg);
    }

    QuadratureOutcome out;
    out.subdivisions = static_cast<int>(cuts.size()) - 1;
    while (out.subdivisions < opts.maxSubdivisions) {
        const double tolerance = std::max(opts.absTol, opts.relTol * std::fabs(total));
        if (totalError <= tolerance) break;
        Segment worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Segment left = evaluateSegment(f, worst.a, mid);
        Segment right = evaluateSegment(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        totalError += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
        ++out.subdivisions;
    }
    out.value = total;
    out.errorEstimate = totalError;
    out.converged = totalError <= std::max(opts.absTol, opts.relTol * std::fabs(total));
    return out;
}

double integrateOrThrow(const std::function<double(double)>& f, double lo, double hi,
                        const QuadratureOptions& opts, std::span<const double> seeds) {
    const QuadratureOutcome out = adaptiveIntegrate(f, lo, hi, opts, seeds);
    if (!out.converged) {
        std::ostringstream msg;
        msg << "quadrature did not converge on [" << lo << ", " << hi << "]: value=" << out.value
            << " error=" << out.errorEstimate << " subdivisions=" << out.subdivisions;
        throw NumericalError(msg.str());
    }
    return out.value;
}

}  // namespace retmix
