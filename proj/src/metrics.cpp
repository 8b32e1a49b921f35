#include "flexpos/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "flexpos/errors.hpp"

namespace flexpos {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
    if (a.empty()) throw DomainError("metric needs a non-empty series");
    if (a.size() != b.size()) throw DomainError("metric series lengths differ");
}

}  // namespace

double rmse(std::span<const double> actual, std::span<const double> desired) {
    check_pair(actual, desired);
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - desired[i];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(actual.size()));
}

double max_abs_error(std::span<const double> actual, std::span<const double> desired) {
    check_pair(actual, desired);
    double worst = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) worst = std::max(worst, std::abs(actual[i] - desired[i]));
    return worst;
}

double hysteresis_width_percent(std::span<const double> input, std::span<const double> output, std::size_t bins) {
    check_pair(input, output);
    if (bins == 0) throw DomainError("hysteresis width needs at least one bin");
    const auto [in_lo, in_hi] = std::minmax_element(input.begin(), input.end());
    const auto [out_lo, out_hi] = std::minmax_element(output.begin(), output.end());
    const double in_range = *in_hi - *in_lo;
    const double out_range = *out_hi - *out_lo;
    if (!(in_range > 0.0)) throw DomainError("hysteresis width needs a varying input");

    // Per-bin centroids of each branch; the branches are compared at the bin
    // centres by interpolating between centroids, so a loop-free curve scores 0.
    struct Branch {
        std::vector<double> in, out;
        std::vector<std::size_t> n;
    };
    Branch up{std::vector<double>(bins), std::vector<double>(bins), std::vector<std::size_t>(bins)};
    Branch down = up;
    for (std::size_t i = 0; i + 1 < input.size(); ++i) {
        const double dir = input[i + 1] - input[i];
        if (dir == 0.0) continue;
        const double pos = (input[i] - *in_lo) / in_range * static_cast<double>(bins);
        const auto b = std::min(bins - 1, static_cast<std::size_t>(pos));
        Branch& br = dir > 0.0 ? up : down;
        br.in[b] += input[i];
        br.out[b] += output[i];
        ++br.n[b];
    }
    auto centroids = [](const Branch& br) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t b = 0; b < br.n.size(); ++b)
            if (br.n[b] > 0) pts.emplace_back(br.in[b] / br.n[b], br.out[b] / br.n[b]);
        return pts;
    };
    const auto up_pts = centroids(up);
    const auto down_pts = centroids(down);
    auto interp = [](const std::vector<std::pair<double, double>>& pts, double x) {
        auto it = std::lower_bound(pts.begin(), pts.end(), x, [](const auto& p, double v) { return p.first < v; });
        if (it == pts.begin()) return it->second;
        if (it == pts.end()) return pts.back().second;
        const auto& [x1, y1] = *it;
        const auto& [x0, y0] = *(it - 1);
        return x1 == x0 ? y1 : y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    };

    bool shared = false;
    double widest = 0.0;
    if (!up_pts.empty() && !down_pts.empty()) {
        const double lo = std::max(up_pts.front().first, down_pts.front().first);
        const double hi = std::min(up_pts.back().first, down_pts.back().first);
        for (std::size_t b = 0; b < bins; ++b) {
            const double x = *in_lo + (static_cast<double>(b) + 0.5) / static_cast<double>(bins) * in_range;
            if (x < lo || x > hi) continue;
            shared = true;
            widest = std::max(widest, std::abs(interp(up_pts, x) - interp(down_pts, x)));
        }
    }
    if (!shared) throw DomainError("hysteresis width needs a cyclic input (rising and falling over a common range)");
    if (!(out_range > 0.0)) return 0.0;
    return 100.0 * widest / out_range;
}

double improvement_percent(double rmse_new, double rmse_base) {
    if (!(rmse_base > 0.0)) throw DomainError("improvement needs a positive baseline RMSE");
    return 100.0 * (1.0 - rmse_new / rmse_base);
}

}  // namespace flexpos
