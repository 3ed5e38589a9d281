#include <doctest.h>

#include <cmath>
#include <vector>

#include "tailgen/errors.hpp"
#include "tailgen/numerics.hpp"

using namespace tailgen;

namespace {
// Independent oracle: bisection of w e^w = x on [lo, hi].
long double lambert_w_bisect(long double x, long double lo, long double hi) {
    for (int i = 0; i < 200; ++i) {
        const long double mid = 0.5L * (lo + hi);
        if (mid * std::exp(mid) < x) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5L * (lo + hi);
}
}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("lambert_w fixed points") {
    CHECK(lambert_w(0.0L) == 0.0L);
    CHECK(std::abs(lambert_w(std::exp(1.0L)) - 1.0L) < 1e-14L);
}

TEST_CASE("lambert_w at 10 matches a bisection oracle") {
    const long double w = lambert_w(10.0L);
    const long double oracle = lambert_w_bisect(10.0L, 0.0L, 10.0L);
    CHECK(std::abs(w - oracle) < 1e-12L);
    CHECK(std::abs(w * std::exp(w) - 10.0L) < 1e-10L);
}

TEST_CASE("lambert_w residual across the specified grid") {
    const long double e = std::exp(1.0L);
    const std::vector<long double> grid = {-1.0L / e + 1e-6L, -0.1L, 0.0L, 0.5L,
                                           1.0L,  e,    10.0L, 1e3L, 1e6L};
    for (const long double x : grid) {
        const long double w = lambert_w(x);
        CHECK(std::abs(w * std::exp(w) - x) < 1e-10L);
    }
}

TEST_CASE("lambert_w is monotone increasing") {
    long double prev = lambert_w(-1.0L / std::exp(1.0L) + 1e-6L);
    for (long double x = -0.35L; x <= 20.0L; x += 0.05L) {
        const long double w = lambert_w(x);
        CHECK(w >= prev);
        prev = w;
    }
}

TEST_CASE("lambert_w domain error below the branch point") {
    CHECK_THROWS_AS(lambert_w(-1.0L), InputError);
    CHECK_THROWS_AS(lambert_w(-0.5L), InputError);
}

TEST_CASE("sgd step") {
    std::vector<double> p{1.0};
    std::vector<double> g{0.5};
    OptimizerConfig cfg;
    cfg.method = OptMethod::sgd;
    cfg.step_size = 0.1;
    OptState state;
    opt_step(p, g, state, cfg);
    CHECK(p[0] == doctest::Approx(0.95).epsilon(1e-14));
    CHECK(state.step == 1);
}

TEST_CASE("adam first step has magnitude about the step size") {
    // Hand evaluation at t = 1: m-hat = g, v-hat = g^2, so the update is
    // eta * g / (|g| + eps) regardless of the gradient's size.
    for (double g0 : {2.0, -0.25, 1e-4}) {
        std::vector<double> p{0.0};
        std::vector<double> g{g0};
        OptimizerConfig cfg;  // adam defaults
        OptState state;
        opt_step(p, g, state, cfg);
        const double expected = -cfg.step_size * g0 / (std::abs(g0) + cfg.eps);
        CHECK(p[0] == doctest::Approx(expected).epsilon(1e-12));
        CHECK(std::abs(p[0]) == doctest::Approx(cfg.step_size).epsilon(1e-4));
    }
}

TEST_CASE("zero gradient leaves parameters, bumps step count") {
    std::vector<double> p{1.5, -2.0};
    const std::vector<double> before = p;
    std::vector<double> g{0.0, 0.0};
    OptimizerConfig cfg;
    OptState state;
    opt_step(p, g, state, cfg);
    CHECK(p == before);
    CHECK(state.step == 1);
    opt_step(p, g, state, cfg);
    CHECK(p == before);
    CHECK(state.step == 2);
}

TEST_CASE("optimizer shape mismatch") {
    std::vector<double> p{1.0, 2.0};
    std::vector<double> g{1.0};
    OptimizerConfig cfg;
    OptState state;
    CHECK_THROWS_AS(opt_step(p, g, state, cfg), InputError);
}

TEST_CASE("optimizer determinism") {
    auto run = [] {
        std::vector<double> p{0.3, -0.7, 1.1};
        OptimizerConfig cfg;
        OptState state;
        for (int i = 0; i < 25; ++i) {
            std::vector<double> g{0.1 * i, -0.05 * i, 0.01};
            opt_step(p, g, state, cfg);
        }
        return p;
    };
    CHECK(run() == run());
}

TEST_CASE("finite differences of p^2") {
    auto f = [](std::span<const double> p) { return p[0] * p[0]; };
    std::vector<double> p{3.0};
    const auto g = finite_diff_grad(f, p, 1e-5);
    CHECK(std::abs(g[0] - 6.0) < 1e-6);
}

TEST_CASE("finite differences of a constant") {
    auto f = [](std::span<const double>) { return 42.0; };
    std::vector<double> p{1.0, 2.0, 3.0};
    for (double g : finite_diff_grad(f, p, 1e-5)) CHECK(g == 0.0);
}

TEST_CASE("optimizer config validation") {
    OptimizerConfig cfg;
    cfg.step_size = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
    cfg = {};
    cfg.beta1 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
}

}  // TEST_SUITE
