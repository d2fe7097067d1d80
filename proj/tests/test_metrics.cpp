#include "mkrem/metrics.hpp"

#include "mkrem/phantom.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace mkrem;

TEST_CASE("mse formula") {
    const DenseVector f{1, 1};
    CHECK(mse(f, f) == 0.0);

    DenseVector twice{2, 2};
    CHECK(mse(twice, f) == doctest::Approx(1.0));

    const DenseVector shifted{2, 1};  // f + e1
    CHECK(mse(shifted, f) == doctest::Approx(0.5));

    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        auto x = testutil::random_vector(30, seed);
        auto ff = testutil::random_vector(30, 100 + seed);
        CHECK(mse(x, ff) >= 0.0);
        CHECK(mse(ff, ff) == 0.0);
    }
    CHECK_THROWS_AS(mse({1.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(mse({1.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("bias formula and linearity") {
    const DenseVector f{1, 2, 3, 4};
    CHECK(bias(f, f) == 0.0);

    DenseVector scaled(f);
    for (double& v : scaled) v *= 1.1;
    CHECK(bias(scaled, f) == doctest::Approx(0.1));

    // xbar = f + c * 1 -> bias = c * M / sum(f)
    DenseVector plus(f);
    for (double& v : plus) v += 0.5;
    CHECK(bias(plus, f) == doctest::Approx(0.5 * 4.0 / 10.0));

    // linear in xbar
    const auto a = testutil::random_vector(4, 3);
    const auto b = testutil::random_vector(4, 4);
    DenseVector mix(4);
    for (int i = 0; i < 4; ++i) mix[i] = 0.25 * a[i] + 0.75 * b[i];
    CHECK(bias(mix, f) == doctest::Approx(0.25 * bias(a, f) + 0.75 * bias(b, f)));
}

TEST_CASE("variance formula") {
    const DenseVector f{1, 1, 1, 1};

    std::vector<DenseVector> same{{2, 2, 2, 2}, {2, 2, 2, 2}, {2, 2, 2, 2}};
    CHECK(variance(same, f) == 0.0);

    // two realizations f +- d -> sum d^2 / sum f^2
    const DenseVector d{0.5, -0.25, 0.1, 0.0};
    std::vector<DenseVector> two(2, f);
    for (int i = 0; i < 4; ++i) {
        two[0][i] += d[i];
        two[1][i] -= d[i];
    }
    const double want = dot(d, d) / dot(f, f);
    CHECK(variance(two, f) == doctest::Approx(want));

    // quadratic scaling: halving d quarters the variance
    std::vector<DenseVector> half(2, f);
    for (int i = 0; i < 4; ++i) {
        half[0][i] += 0.5 * d[i];
        half[1][i] -= 0.5 * d[i];
    }
    CHECK(variance(half, f) == doctest::Approx(0.25 * want));

    // depends only on deviations from the ensemble mean
    std::vector<DenseVector> shifted = two;
    for (auto& x : shifted)
        for (double& v : x) v += 3.0;
    CHECK(variance(shifted, f) == doctest::Approx(variance(two, f)));
}

TEST_CASE("amse curve") {
    EnsembleResult e;
    e.reference = {1, 1};
    e.iterations = {1, 2};
    e.images = {{{1, 1}, {2, 2}},   // realization 0: mse 0 then 1
                {{2, 1}, {1, 1}}};  // realization 1: mse 0.5 then 0
    const auto curve = amse_curve(e);
    REQUIRE(curve.size() == 2);
    CHECK(curve[0].first == 1);
    CHECK(curve[0].second == doctest::Approx(0.25));
    CHECK(curve[1].second == doctest::Approx(0.5));

    // single realization reproduces its own MSE curve
    EnsembleResult single;
    single.reference = e.reference;
    single.iterations = e.iterations;
    single.images = {e.images[0]};
    const auto solo = amse_curve(single);
    CHECK(solo[0].second == doctest::Approx(0.0));
    CHECK(solo[1].second == doctest::Approx(1.0));

    // permutation invariance
    EnsembleResult swapped = e;
    std::swap(swapped.images[0], swapped.images[1]);
    const auto curve2 = amse_curve(swapped);
    for (std::size_t t = 0; t < curve.size(); ++t)
        CHECK(curve[t].second == doctest::Approx(curve2[t].second));
}

TEST_CASE("line profile") {
    DenseVector flat(12, 2.0);
    const auto p = line_profile(flat, 4, 3, 1);
    CHECK(p.size() == 4);
    for (const double v : p) CHECK(v == 2.0);

    CHECK_THROWS_AS(line_profile(flat, 4, 3, 3), std::invalid_argument);

    // profile through the phantom lesion peaks inside the mask
    const auto pair = make_brain_like_phantom(64, 64, true, {});
    REQUIRE(pair.lesion_row >= 0);
    const auto prof = line_profile(pair.activity, 64, 64, pair.lesion_row);
    CHECK(prof.size() == 64);
    const auto it = std::max_element(prof.begin(), prof.end());
    const int col = static_cast<int>(it - prof.begin());
    CHECK(pair.lesion_mask[static_cast<std::size_t>(pair.lesion_row) * 64 + col] == 1);
}
