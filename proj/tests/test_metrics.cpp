#include <doctest.h>

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "flexpos/axis_dynamics.hpp"
#include "flexpos/errors.hpp"
#include "flexpos/metrics.hpp"

using namespace flexpos;

namespace {

constexpr double kPi = std::numbers::pi;

double naive_rmse(const std::vector<double>& a, const std::vector<double>& d) {
    long double sum = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const long double e = static_cast<long double>(a[i]) - d[i];
        sum += e * e;
    }
    return static_cast<double>(std::sqrt(sum / a.size()));
}

// Separates samples by input direction, sorts each branch by input and
// interpolates both on a common grid.
double brute_force_width(const std::vector<double>& in, const std::vector<double>& out) {
    std::vector<std::pair<double, double>> up, down;
    for (std::size_t i = 1; i < in.size(); ++i) {
        if (in[i] > in[i - 1]) up.emplace_back(in[i], out[i]);
        else if (in[i] < in[i - 1]) down.emplace_back(in[i], out[i]);
    }
    std::sort(up.begin(), up.end());
    std::sort(down.begin(), down.end());
    auto interp = [](const std::vector<std::pair<double, double>>& br, double x) {
        auto it = std::lower_bound(br.begin(), br.end(), std::make_pair(x, -std::numeric_limits<double>::infinity()));
        if (it == br.begin()) return it->second;
        if (it == br.end()) return br.back().second;
        const auto& [x1, y1] = *it;
        const auto& [x0, y0] = *(it - 1);
        return x1 == x0 ? y1 : y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    };
    const double lo = std::max(up.front().first, down.front().first);
    const double hi = std::min(up.back().first, down.back().first);
    const auto [omin, omax] = std::minmax_element(out.begin(), out.end());
    double worst = 0.0;
    for (int k = 0; k <= 2000; ++k) {
        const double x = lo + (hi - lo) * k / 2000.0;
        worst = std::max(worst, std::abs(interp(up, x) - interp(down, x)));
    }
    return 100.0 * worst / (*omax - *omin);
}

}  // namespace

TEST_CASE("rmse") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    CHECK(rmse(a, a) == 0.0);
    const std::vector<double> b{1.5, 2.5, 3.5};
    CHECK(rmse(b, a) == doctest::Approx(0.5));
    CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), DomainError);
    CHECK_THROWS_AS(rmse(a, std::vector<double>{1.0}), DomainError);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1e-3);
    std::vector<double> act(40000), des(40000);
    for (std::size_t i = 0; i < des.size(); ++i) {
        des[i] = 3000.0 * std::sin(1e-3 * static_cast<double>(i));
        act[i] = des[i] + g(rng);
    }
    CHECK(rmse(act, des) == doctest::Approx(naive_rmse(act, des)).epsilon(1e-12));
}

TEST_CASE("max abs error") {
    CHECK(max_abs_error(std::vector<double>{1.0, -4.0, 2.0}, std::vector<double>{0.0, 0.0, 0.0}) == 4.0);
}

TEST_CASE("hysteresis width of a phase-lagged sinusoid") {
    const int n = 20000;
    for (double phi : {0.05, 0.2, 0.6}) {
        std::vector<double> in(n), out(n);
        for (int i = 0; i < n; ++i) {
            const double t = 2 * kPi * 2.0 * i / n;
            in[i] = std::sin(t);
            out[i] = std::sin(t - phi);
        }
        // Branch separation is 2 sin(phi) at zero input over a range of 2.
        CHECK(hysteresis_width_percent(in, out) == doctest::Approx(100.0 * std::sin(phi)).epsilon(0.01));
        CHECK(hysteresis_width_percent(in, out) == doctest::Approx(brute_force_width(in, out)).epsilon(0.01));
    }
}

TEST_CASE("no loop means zero width") {
    std::vector<double> in(5000);
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = std::sin(0.01 * static_cast<double>(i));
    CHECK(hysteresis_width_percent(in, in) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("monotone input is rejected") {
    std::vector<double> in(100), out(100);
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = out[i] = static_cast<double>(i);
    CHECK_THROWS_AS(hysteresis_width_percent(in, out), DomainError);
}

TEST_CASE("Bouc-Wen open loop width matches the brute-force branch separation") {
    BoucWenDisturbance bw;
    bw.scale = 0.5;
    const int n = 10000;
    std::vector<double> in, out;
    double prev = 0.0;
    for (int i = 0; i < 3 * n; ++i) {
        const double u = std::sin(2 * kPi * i / n);
        const double d = bouc_wen_update(bw, u, prev, 1e-4);
        prev = u;
        if (i >= n) {
            in.push_back(u);
            out.push_back(u + d);
        }
    }
    const double w = hysteresis_width_percent(in, out);
    CHECK(w > 1.0);
    CHECK(w == doctest::Approx(brute_force_width(in, out)).epsilon(0.03));
}

TEST_CASE("improvement arithmetic") {
    CHECK(improvement_percent(1.0, 1.0) == 0.0);
    CHECK(std::round(improvement_percent(0.0026, 0.0819) * 100) / 100 == doctest::Approx(96.83));
    CHECK(std::round(improvement_percent(0.0098, 0.1094) * 100) / 100 == doctest::Approx(91.04));
    CHECK(std::round(improvement_percent(0.0062, 0.0239) * 100) / 100 == doctest::Approx(74.06));
    CHECK_THROWS_AS(improvement_percent(1.0, 0.0), DomainError);
}
