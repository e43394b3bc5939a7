// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "ptkit/error.hpp"
#include "ptkit/rng.hpp"
#include "ptkit/router.hpp"

using namespace ptkit;
using namespace ptkit::router;

TEST_CASE("route without bias is plain top-k of sigmoid scores") {
    RouterConfig cfg{8, 3, 1, 1e-3, 1e-4};
    std::vector<double> logits{0.1, 2.0, -1.0, 1.5, 0.0, 3.0, -2.0, 0.7};
    std::vector<double> bias(8, 0.0);
    auto d = route(logits, bias, cfg);
    CHECK(d.selected == std::vector<std::size_t>{5, 1, 3});
    double sum = std::accumulate(d.gates.begin(), d.gates.end(), 0.0);
    CHECK(std::abs(sum - 1.0) < 1e-12);
    const double z = sigmoid(3.0) + sigmoid(2.0) + sigmoid(1.5);
    CHECK(d.gates[0] == doctest::Approx(sigmoid(3.0) / z).epsilon(1e-14));
}

TEST_CASE("huge bias forces selection but not the gate") {
    RouterConfig cfg{8, 2, 1, 1e-3, 1e-4};
    std::vector<double> logits{0.1, 2.0, -1.0, 1.5, 0.0, 3.0, -2.0, -5.0};
    std::vector<double> bias(8, 0.0);
    bias[7] = 1e6;
    auto d = route(logits, bias, cfg);
    CHECK(d.selected[0] == 7);
    CHECK(d.selected[1] == 5);
    const double z = sigmoid(-5.0) + sigmoid(3.0);
    CHECK(d.gates[0] == doctest::Approx(sigmoid(-5.0) / z).epsilon(1e-14));
}

TEST_CASE("bias update follows the sign rule") {
    RouterConfig cfg{4, 1, 0, 1e-3, 1e-4};
    Router r(cfg, 3, 1);
    std::vector<double> balanced{5, 5, 5, 5};
    r.update_bias(balanced);
    for (double b : r.bias()) CHECK(b == 0.0);
    std::vector<double> hog{20, 0, 0, 0};
    r.update_bias(hog);
    CHECK(r.bias()[0] == -1e-3);
    for (std::size_t e = 1; e < 4; ++e) CHECK(r.bias()[e] == 1e-3);
    std::vector<double> wrong{1, 2};
    CHECK_THROWS_AS(r.update_bias(wrong), Error);
}

TEST_CASE("lb loss closed forms") {
    RouterConfig cfg{4, 1, 0, 1e-3, 1e-4};
    const std::size_t T = 8;
    std::vector<double> uniform(T * 4, 0.25);
    std::vector<std::size_t> sel;
    for (std::size_t t = 0; t < T; ++t) sel.push_back(t % 4);
    CHECK(lb_loss(uniform, sel, T, cfg) == doctest::Approx(1e-4).epsilon(1e-12));

    std::vector<double> hot(T * 4, 0.0);
    for (std::size_t t = 0; t < T; ++t) hot[t * 4] = 1.0;
    std::vector<std::size_t> zero(T, 0);
    CHECK(lb_loss(hot, zero, T, cfg) == doctest::Approx(4e-4).epsilon(1e-12));

    RouterConfig scaled = cfg;
    scaled.lb_coeff = 3e-4;
    CHECK(lb_loss(hot, zero, T, scaled) == doctest::Approx(3 * lb_loss(hot, zero, T, cfg)).epsilon(1e-12));

    std::vector<std::size_t> lens{4, 4};
    CHECK(lb_loss_scoped(uniform, sel, lens, LossScope::batch, cfg) == doctest::Approx(1e-4));
    CHECK(lb_loss_scoped(uniform, sel, lens, LossScope::sequence, cfg) == doctest::Approx(1e-4));
    CHECK_THROWS_AS(lb_loss(uniform, sel, T - 1, cfg), Error);
}

TEST_CASE("frozen router keeps updating bias and refuses weights") {
    RouterConfig cfg{8, 2, 1, 1e-3, 1e-4};
    Router r(cfg, 4, 9);
    std::vector<double> h{0.3, -0.2, 1.0, 0.5};
    auto before = r.route(r.logits(h));
    auto view = freeze_router(r);
    auto after = view.route(r.logits(h));
    CHECK(before.selected == after.selected);
    CHECK(before.gates == after.gates);
    std::vector<double> loads{8, 0, 0, 0, 0, 0, 0, 0};
    CHECK_NOTHROW(view.update_bias(loads));
    CHECK(r.bias()[0] == -1e-3);
    std::vector<double> delta(8 * 4, 0.1);
    try {
        view.update_weights(delta);
        FAIL("expected frozen error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::frozen);
    }
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS((RouterConfig{4, 5, 0, 1e-3, 1e-4}.validate()), Error);
    CHECK_THROWS_AS((RouterConfig{4, 2, 0, -1, 1e-4}.validate()), Error);
    CHECK_NOTHROW((RouterConfig{4, 2, 0, 0, 1e-4}.validate()));
}

TEST_CASE("short simulation is deterministic and improves balance") {
    SimulationOptions o;
    o.steps = 300;
    o.seed = 5;
    auto a = simulate(o);
    auto b = simulate(o);
    CHECK(a.final_bias == b.final_bias);
    CHECK(a.window_ratio == b.window_ratio);
    CHECK(a.window_ratio.back() < a.window_ratio.front());
}
