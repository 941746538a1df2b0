#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "modnet/params.hpp"
#include "modnet/tensor.hpp"

using namespace modnet;

namespace {

Tensor vec(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor::from({n}, std::move(v));
}

double fd_check_unary(Op which, double lo, double hi, std::size_t points, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    double worst = 0.0;
    for (std::size_t p = 0; p < points; ++p) {
        double x0 = dist(rng);
        if (which == Op::kRelu) {
            while (std::abs(x0) <= 1e-3) x0 = dist(rng);
        }
        ParameterStore store;
        Tensor x = store.put("x", vec({x0}));
        Tensor mut = x;
        mut.set_requires_grad(true);
        auto f = [&](Tape& t) {
            switch (which) {
                case Op::kRelu: return t.sum(t.relu(x));
                case Op::kSigmoid: return t.sum(t.sigmoid(x));
                case Op::kTanh: return t.sum(t.tanh(x));
                case Op::kLogClamped: return t.sum(t.log_clamped(x, 1e-12));
                default: return t.sum(t.mul(x, x));
            }
        };
        worst = std::max(worst, gradient_check(f, store, 1e-6).max_rel_error);
    }
    return worst;
}

}  // namespace

TEST_CASE("elementwise add and mul") {
    Tape t;
    Tensor a = t.add(vec({1, 2}), vec({0, 0}));
    CHECK(a[0] == 1.0);
    CHECK(a[1] == 2.0);

    Tensor m = t.mul(vec({1, 1, 1}), vec({2.5, -3.0, 0.0}));
    CHECK(m[0] == 2.5);
    CHECK(m[1] == -3.0);
    CHECK(m[2] == 0.0);

    Tensor s = t.add(vec({0.5, 0.5}), vec({0.25, 0.75}));
    CHECK(s[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(s[1] == doctest::Approx(1.25).epsilon(1e-15));
}

TEST_CASE("elementwise shape mismatch reports both shapes") {
    Tape t;
    try {
        t.add(vec({1, 2}), vec({1, 2, 3}));
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2]") != std::string::npos);
        CHECK(msg.find("[3]") != std::string::npos);
    }
}

TEST_CASE("elementwise add and mul are exactly commutative") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-100.0, 100.0);
    Tape t;
    for (int trial = 0; trial < 200; ++trial) {
        Tensor a = vec({dist(rng), dist(rng), dist(rng)});
        Tensor b = vec({dist(rng), dist(rng), dist(rng)});
        Tensor ab = t.add(a, b), ba = t.add(b, a);
        Tensor mab = t.mul(a, b), mba = t.mul(b, a);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(ab[i] == ba[i]);
            CHECK(mab[i] == mba[i]);
        }
    }
}

TEST_CASE("activations") {
    Tape t;
    Tensor r = t.relu(vec({-1, 0, 2}));
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 0.0);
    CHECK(r[2] == 2.0);

    Tensor s = t.sigmoid(vec({0}));
    CHECK(s[0] == 0.5);

    Tensor th = t.tanh(vec({0.5}));
    CHECK(th[0] == doctest::Approx(0.46211715726000974).epsilon(1e-15));
    CHECK(th[0] == std::tanh(0.5));
}

TEST_CASE("matvec") {
    Tape t;
    Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor r = t.matvec(eye, vec({3, 4}));
    CHECK(r[0] == 3.0);
    CHECK(r[1] == 4.0);

    Tensor zero = Tensor::zeros({2, 3});
    Tensor z = t.matvec(zero, vec({5, 6, 7}));
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);

    Tensor w = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor h = t.matvec(w, vec({1, 1}));
    CHECK(h[0] == 3.0);
    CHECK(h[1] == 7.0);

    Tensor hb = t.matvec(w, vec({1, 1}), vec({10, 20}));
    CHECK(hb[0] == 13.0);
    CHECK(hb[1] == 27.0);

    CHECK_THROWS_AS(t.matvec(w, vec({1, 2, 3})), DimensionError);
    CHECK_THROWS_AS(t.matvec(w, vec({1, 2}), vec({1, 2, 3})), DimensionError);
}

TEST_CASE("masked softmax basics") {
    Tape t;
    Tensor u = t.softmax(vec({7, 7, 7, 7}));
    for (int i = 0; i < 4; ++i) CHECK(u[i] == doctest::Approx(0.25).epsilon(1e-15));

    Tensor m = t.masked_softmax(vec({3, 3, 3}), {true, true, false});
    CHECK(m[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m[2] == 0.0);

    Tensor two = t.softmax(vec({1, 2}));
    CHECK(two[0] == doctest::Approx(0.2689414213699951).epsilon(1e-14));
    CHECK(two[1] == doctest::Approx(0.7310585786300049).epsilon(1e-14));

    CHECK_THROWS_AS(t.masked_softmax(vec({1, 2}), {false, false}), Error);
    CHECK_THROWS_AS(t.masked_softmax(vec({1, 2}), {true}), DimensionError);
}

TEST_CASE("masked softmax properties") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-50.0, 50.0);
    std::bernoulli_distribution keep(0.7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 8;
        std::vector<double> scores(n);
        std::vector<bool> mask(n);
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = dist(rng);
            mask[i] = keep(rng);
            any = any || mask[i];
        }
        if (!any) mask[rng() % n] = true;

        Tape t;
        Tensor p = t.masked_softmax(vec(scores), mask);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(p[i] >= 0.0);
            if (!mask[i]) CHECK(p[i] == 0.0);
            total += p[i];
        }
        CHECK(std::abs(total - 1.0) < 1e-12);

        // Invariance to adding a constant to all unmasked scores.
        const double shift = dist(rng);
        std::vector<double> shifted = scores;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask[i]) shifted[i] += shift;
        }
        Tensor q = t.masked_softmax(vec(shifted), mask);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(p[i] - q[i]) < 1e-12);
    }
}

TEST_CASE("backward on simple graphs") {
    // loss = sum(x) -> grad ones
    {
        ParameterStore store;
        Tensor x = store.put("x", Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}));
        Tensor mut = x;
        mut.set_requires_grad(true);
        mut.zero_grad();
        Tape t;
        t.backward(t.sum(x));
        for (double g : x.grad()) CHECK(g == 1.0);
    }
    // loss = 0.5 * x * x at x = 3 -> grad 3
    {
        Tensor x = Tensor::scalar(3.0);
        x.set_requires_grad(true);
        x.zero_grad();
        Tape t;
        Tensor loss = t.scale(t.mul(x, x), 0.5);
        t.backward(loss);
        CHECK(loss[0] == 4.5);
        CHECK(x.grad()[0] == 3.0);
    }
}

TEST_CASE("backward rejects non-scalar and foreign losses") {
    Tape t;
    Tensor x = vec({1, 2});
    Tensor y = t.add(x, x);
    CHECK_THROWS_AS(t.backward(y), DimensionError);
    CHECK_THROWS_AS(t.backward(Tensor::scalar(1.0)), Error);
}

TEST_CASE("gradient accumulates over repeated uses") {
    Tensor x = Tensor::scalar(2.0);
    x.set_requires_grad(true);
    x.zero_grad();
    Tape t;
    // loss = x*x + x -> dloss/dx = 2x + 1 = 5
    Tensor loss = t.sum(t.add(t.mul(x, x), x));
    t.backward(loss);
    CHECK(x.grad()[0] == 5.0);
}

TEST_CASE("unreached parameters keep zero gradient") {
    ParameterStore store(1);
    Tensor used = store.create_vector("used", 3, 3, 3);
    store.create_vector("unused", 3, 3, 3);
    store.zero_grads();
    Tape t;
    t.backward(t.sum(used));
    for (double g : store.get("unused").grad()) CHECK(g == 0.0);
}

TEST_CASE("tape replay is bit-identical") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> img(4 * 3 * 3), w(4);
    for (double& v : img) v = dist(rng);
    for (double& v : w) v = dist(rng);

    Tape t;
    Tensor image = Tensor::from({4, 3, 3}, img);
    Tensor att = t.relu(t.conv1x1(image, vec(w), vec({0.1})));
    Tensor pooled = t.attention_pool(image, att, 1e-8);
    Tensor out = t.softmax(t.matvec(Tensor::from({2, 4}, {1, 2, 3, 4, -1, -2, -3, -4}), pooled));

    std::vector<std::vector<double>> before;
    for (std::size_t i = 0; i < t.size(); ++i) before.push_back(t.record(i).output.values());
    t.replay();
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& after = t.record(i).output.values();
        REQUIRE(after.size() == before[i].size());
        CHECK(std::memcmp(after.data(), before[i].data(), after.size() * sizeof(double)) == 0);
    }
    (void)out;
}

TEST_CASE("gradient_check on linear and relu functions") {
    {
        ParameterStore store(5);
        Tensor w = store.create_vector("w", 4, 4, 4);
        auto f = [&](Tape& t) { return t.sum(t.scale(w, 3.25)); };
        CHECK(gradient_check(f, store, 1e-5).max_rel_error < 1e-9);
    }
    CHECK(fd_check_unary(Op::kRelu, -2.0, 2.0, 100, 17) < 1e-6);
}

TEST_CASE("gradient_check validates epsilon") {
    ParameterStore store;
    auto f = [&](Tape& t) { return t.sum(vec({1.0})); };
    CHECK_THROWS_AS(gradient_check(f, store, 1e-2), Error);
    CHECK_THROWS_AS(gradient_check(f, store, 1e-9), Error);
}

TEST_CASE("per-primitive finite-difference sweep") {
    CHECK(fd_check_unary(Op::kSigmoid, -4.0, 4.0, 100, 19) < 1e-4);
    CHECK(fd_check_unary(Op::kTanh, -4.0, 4.0, 100, 23) < 1e-4);
    CHECK(fd_check_unary(Op::kLogClamped, 0.1, 5.0, 100, 29) < 1e-4);

    // Composite sweep across binary/structured primitives at random points.
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        ParameterStore store;
        std::vector<double> wv(6), xv(3), bv(2), av(4), iv(2 * 2 * 2);
        for (double& v : wv) v = dist(rng);
        for (double& v : xv) v = dist(rng);
        for (double& v : bv) v = dist(rng);
        for (double& v : av) v = dist(rng);
        for (double& v : iv) v = dist(rng);
        Tensor w = store.put("w", Tensor::from({2, 3}, wv)).set_requires_grad(true);
        Tensor x = store.put("x", vec(xv)).set_requires_grad(true);
        Tensor b = store.put("b", vec(bv)).set_requires_grad(true);
        Tensor a = store.put("a", vec(av)).set_requires_grad(true);
        Tensor img = store.put("img", Tensor::from({2, 2, 2}, iv)).set_requires_grad(true);

        auto f = [&](Tape& t) {
            Tensor mv = t.matvec(w, x, b);
            Tensor sm = t.softmax(a);
            Tensor att = t.reshape(t.relu(t.concat({mv, t.pick(sm, 1)})), {1, 3});
            // build a 2x2 attention from pieces to exercise concat_cols
            Tensor c0 = t.sigmoid(mv);
            Tensor c1 = t.sigmoid(t.scale(mv, 0.5));
            Tensor grid = t.concat_cols({c0, c1});
            Tensor pooled = t.attention_pool(img, grid, 1e-8);
            (void)att;
            return t.sum(t.concat({pooled, t.sum(sm), mv}));
        };
        worst = std::max(worst, gradient_check(f, store, 1e-5).max_rel_error);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("attention pool handles zero attention through epsilon") {
    Tape t;
    Tensor img = Tensor::from({2, 1, 2}, {5, 6, 7, 8});
    Tensor att = Tensor::zeros({1, 2});
    Tensor v = t.attention_pool(img, att, 1e-8);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == 0.0);
}
