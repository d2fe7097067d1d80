#include "mkrem/recon.hpp"

#include "mkrem/kernel.hpp"
#include "mkrem/phantom.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace mkrem;

namespace {

// two-voxel system with an identity projector
SystemModel tiny_identity_model() {
    Geometry g{2, 1, 1, 2, 1.0};
    return SystemModel(g, SparseMatrix::identity(2));
}

SystemModel small_model(DenseVector r = {}) {
    Geometry g{8, 8, 6, 13, 1.0};
    auto h = build_system_matrix(g);
    return SystemModel(g, std::move(h), std::move(r));
}

DenseVector small_phantom_image() {
    const auto pair = make_brain_like_phantom(16, 16, false, {});
    return pair.activity;
}

}  // namespace

TEST_CASE("mlem_step hand oracle on the identity system") {
    const auto model = tiny_identity_model();
    const DenseVector p{2, 4};
    const auto x1 = mlem_step(model, {1, 1}, nullptr, p);
    CHECK(x1[0] == doctest::Approx(2.0));
    CHECK(x1[1] == doctest::Approx(4.0));

    // zero is a multiplicative fixed point
    const auto z = mlem_step(model, {0, 0}, nullptr, p);
    CHECK(z == DenseVector{0, 0});
}

TEST_CASE("mlem log-likelihood non-decreasing on noiseless data") {
    const auto model = small_model();
    DenseVector truth(64, 0.0);
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = (i % 9 < 4) ? 2.0 : 0.5;
    const auto p = model.forward(truth);

    DenseVector x = ones(64);
    double prev = poisson_loglik(model, x, p);
    const auto sens = model.sensitivity();
    for (int it = 0; it < 50; ++it) {
        x = mlem_step(model, x, nullptr, p, 0.0, 1e-12, &sens);
        const double ll = poisson_loglik(model, x, p);
        CHECK(ll >= prev - 1e-9 * std::abs(prev));
        prev = ll;
    }
}

TEST_CASE("mlem count preservation on noiseless data") {
    const auto model = small_model();
    DenseVector truth(64, 0.0);
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = (i % 7 < 3) ? 1.5 : 0.25;
    const auto p = model.forward(truth);
    const double ptotal = vec_sum(p);

    DenseVector x = ones(64);
    double prev_gap = 1e300;
    for (int it = 0; it < 20; ++it) {
        x = mlem_step(model, x, nullptr, p);
        const double gap = std::abs(vec_sum(model.forward(x)) - ptotal) / ptotal;
        CHECK(gap <= prev_gap + 1e-12);
        prev_gap = gap;
    }
    CHECK(prev_gap < 1e-3);
}

TEST_CASE("gaussian_postfilter basics") {
    DenseVector flat(64, 3.0);
    const auto same = gaussian_postfilter(flat, 8, 8, 5, 1.0);
    for (const double v : same) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));

    // impulse spreads the sampled kernel footprint
    DenseVector impulse(81, 0.0);
    impulse[4 * 9 + 4] = 1.0;
    const auto blurred = gaussian_postfilter(impulse, 9, 9, 5, 1.0);
    CHECK(blurred[4 * 9 + 4] > blurred[4 * 9 + 5]);
    CHECK(blurred[4 * 9 + 5] > blurred[4 * 9 + 6]);
    CHECK(blurred[4 * 9 + 5] == doctest::Approx(blurred[3 * 9 + 4]));
    // interior-supported: total mass preserved
    CHECK(vec_sum(blurred) == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(gaussian_postfilter(flat, 8, 8, 4, 1.0), std::invalid_argument);
}

TEST_CASE("kem_step reduces to mlem_step for the identity kernel") {
    const auto model = small_model();
    const auto k = SparseMatrix::identity(64);
    DenseVector p(static_cast<std::size_t>(model.geom().num_bins()));
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(i % 5);

    DenseVector a(64);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.25 + 0.01 * static_cast<double>(i);
    const auto via_kem = kem_step(model, k, a, p);
    const auto via_mlem = mlem_step(model, a, nullptr, p);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max(1.0, std::abs(via_mlem[i]));
        CHECK(std::abs(via_kem[i] - via_mlem[i]) <= 1e-14 * scale);
    }
}

TEST_CASE("kem_step hand oracle on a 2-pixel toy") {
    const auto model = tiny_identity_model();
    // row-normalized [[1, .5], [.5, 1]]
    const auto k = SparseMatrix::from_dense(2, 2, {2.0 / 3, 1.0 / 3, 1.0 / 3, 2.0 / 3});
    const DenseVector p{2, 4};
    const auto a1 = kem_step(model, k, {1, 1}, p);
    // x = Ka = [1,1]; ratio = [2,4]; K^T ratio = [8/3, 10/3]; K^T 1 = [1,1]
    CHECK(a1[0] == doctest::Approx(8.0 / 3));
    CHECK(a1[1] == doctest::Approx(10.0 / 3));

    // nonnegativity is preserved
    for (const double v : a1) CHECK(v >= 0.0);
}

TEST_CASE("mkrem_step with zero betas equals kem_step") {
    const auto model = small_model();
    const auto priors = std::vector<DenseVector>{small_phantom_image()};
    KernelSpec ks;
    ks.window_j = 3;
    // kernel built on an 8x8 crop of the prior
    DenseVector crop(64);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) crop[y * 8 + x] = priors[0][y * 16 + x];
    const auto k = build_single_kernel({crop}, 8, 8, ks);

    DenseVector p(static_cast<std::size_t>(model.geom().num_bins()), 3.0);
    DenseVector a(64, 0.7);
    const auto via_kem = kem_step(model, k, a, p);
    const auto via_mkrem = mkrem_step(model, k, a, p, nullptr, nullptr, 0.0, 0.0);
    CHECK(via_kem == via_mkrem);
}

TEST_CASE("mkrem_step fixed point on noiseless data") {
    const auto model = small_model();
    const auto k = SparseMatrix::from_dense(
        64, 64, [] {
            std::vector<double> d(64 * 64, 0.0);
            for (int i = 0; i < 64; ++i) {
                d[i * 64 + i] = 0.8;
                d[i * 64 + ((i + 1) % 64)] = 0.2;
            }
            return d;
        }());
    DenseVector a_star(64);
    for (std::size_t i = 0; i < a_star.size(); ++i) a_star[i] = 0.5 + 0.02 * (i % 9);
    const auto p = model.forward(matvec(k, a_star));

    const auto a_next = mkrem_step(model, k, a_star, p, nullptr, nullptr, 0.0, 0.0);
    for (std::size_t i = 0; i < a_star.size(); ++i)
        CHECK(std::abs(a_next[i] - a_star[i]) < 1e-8);
}

TEST_CASE("mkrem_step requires packs when betas active") {
    const auto model = tiny_identity_model();
    const auto k = SparseMatrix::identity(2);
    CHECK_THROWS_AS(
        mkrem_step(model, k, {1, 1}, {1, 1}, nullptr, nullptr, 0.1, 0.0),
        std::invalid_argument);
    CHECK_THROWS_AS(
        mkrem_step(model, k, {1, 1}, {1, 1}, nullptr, nullptr, 0.0, 0.1),
        std::invalid_argument);
}

TEST_CASE("run reduction chain mkrem == kem == mlem for identity kernel") {
    const auto model = small_model();
    const auto truth = [] {
        DenseVector t(64);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = (i % 5 == 0) ? 2.0 : 0.4;
        return t;
    }();
    const auto p = poissonize(scale_to_counts(model.forward(truth), 5000.0), 99);
    const auto id = SparseMatrix::identity(64);

    ReconConfig base;
    base.n_iters = 12;
    base.record_every = 3;

    ReconConfig cm = base;
    cm.algorithm = Algorithm::mlem;
    const auto rm = run(model, cm, nullptr, nullptr, nullptr, p);

    ReconConfig ck = base;
    ck.algorithm = Algorithm::kem;
    const auto rk = run(model, ck, &id, nullptr, nullptr, p);

    ReconConfig cr = base;
    cr.algorithm = Algorithm::mkrem;
    cr.beta1 = 0.0;
    cr.beta2 = 0.0;
    const auto rr = run(model, cr, &id, nullptr, nullptr, p);

    REQUIRE(rm.images.size() == rk.images.size());
    REQUIRE(rm.images.size() == rr.images.size());
    for (std::size_t t = 0; t < rm.images.size(); ++t)
        for (std::size_t j = 0; j < rm.images[t].size(); ++j) {
            const double scale = std::max(1.0, std::abs(rm.images[t][j]));
            CHECK(std::abs(rk.images[t][j] - rm.images[t][j]) <= 1e-14 * scale);
            CHECK(std::abs(rr.images[t][j] - rm.images[t][j]) <= 1e-14 * scale);
        }
}

TEST_CASE("run records, determinism, and nonnegativity") {
    const auto model = small_model();
    const auto p = poissonize(
        scale_to_counts(model.forward(ones(64)), 2000.0), 7);

    ReconConfig cfg;
    cfg.algorithm = Algorithm::mlem;
    cfg.n_iters = 10;
    cfg.record_every = 2;
    const auto r1 = run(model, cfg, nullptr, nullptr, nullptr, p);
    CHECK(r1.iterations == std::vector<int>{2, 4, 6, 8, 10});
    CHECK(r1.images.size() == 5);

    // n_iters = 1 equals a single step call
    ReconConfig one = cfg;
    one.n_iters = 1;
    one.record_every = 1;
    const auto rone = run(model, one, nullptr, nullptr, nullptr, p);
    const auto manual = mlem_step(model, ones(64), nullptr, p);
    CHECK(rone.final_image == manual);

    // bitwise determinism
    const auto r2 = run(model, cfg, nullptr, nullptr, nullptr, p);
    CHECK(r1.final_image == r2.final_image);
    for (std::size_t t = 0; t < r1.images.size(); ++t) CHECK(r1.images[t] == r2.images[t]);

    for (const auto& img : r1.images)
        for (const double v : img) CHECK(v >= 0.0);
}

TEST_CASE("sensitivity purity: recomputation changes nothing") {
    const auto model = small_model();
    const auto s1 = model.sensitivity();
    const auto p = poissonize(scale_to_counts(model.forward(ones(64)), 1500.0), 3);
    DenseVector x = ones(64);
    for (int i = 0; i < 3; ++i) x = mlem_step(model, x, nullptr, p, 0.0, 1e-12, &s1);
    const auto s2 = model.sensitivity();
    CHECK(s1 == s2);
    const auto with_fresh = mlem_step(model, x, nullptr, p, 0.0, 1e-12, &s2);
    const auto with_cached = mlem_step(model, x, nullptr, p, 0.0, 1e-12, &s1);
    CHECK(with_fresh == with_cached);
}

TEST_CASE("mlem_f records filtered snapshots of an unfiltered iteration") {
    const auto model = small_model();
    const auto p = poissonize(scale_to_counts(model.forward(ones(64)), 3000.0), 21);

    ReconConfig plain;
    plain.algorithm = Algorithm::mlem;
    plain.n_iters = 6;
    ReconConfig filt = plain;
    filt.algorithm = Algorithm::mlem_f;

    const auto rp = run(model, plain, nullptr, nullptr, nullptr, p);
    const auto rf = run(model, filt, nullptr, nullptr, nullptr, p);
    for (std::size_t t = 0; t < rp.images.size(); ++t) {
        const auto want = gaussian_postfilter(rp.images[t], 8, 8, filt.filter_window,
                                              filt.filter_sigma);
        CHECK(rf.images[t] == want);
    }
    CHECK(rf.final_coefficients == rp.final_coefficients);  // same underlying iterate
}

TEST_CASE("full mkrem run with both regularizers is finite and nonnegative") {
    const auto pair = make_brain_like_phantom(16, 16, true, {});
    Geometry g{16, 16, 12, 23, 1.0};
    auto h = build_system_matrix(g);
    SystemModel model(g, std::move(h));
    const auto p = poissonize(scale_to_counts(model.forward(pair.activity), 8000.0), 5);

    KernelSpec ka;
    ka.window_j = 7;
    MultiKernelSpec mka{{ka, ka}};
    const auto k_ma = build_multi_kernel(pair.priors, 16, 16, mka);

    KernelSpec kb;
    kb.window_j = 3;
    MultiKernelSpec mkb{{kb, kb}};
    const auto k_mb = build_multi_kernel(pair.priors, 16, 16, mkb);

    PatchOperator op{3, 1, 16, 16};
    const auto data = build_learning_data(k_mb, pair.priors, op, 100, 11);
    const auto d_b = ksvd_learn(data, 12, 4, 5, 13);
    const auto ktilde = factorize(k_ma, k_mb);
    DictionaryPack dict{map_dictionary(ktilde, d_b, op), op, 4};

    GraphSpec gs;
    gs.knn = 5;
    gs.knn_graph = 12;
    gs.t_max = 5;
    const auto lap = build_laplacian(pair.priors, 16, 16, gs);

    ReconConfig cfg;
    cfg.algorithm = Algorithm::mkrem;
    cfg.n_iters = 8;
    cfg.beta1 = 0.003;
    cfg.beta2 = 0.13;
    const auto r = run(model, cfg, &k_ma, &dict, &lap, p);
    for (const auto& img : r.images)
        for (const double v : img) {
            CHECK(std::isfinite(v));
            CHECK(v >= 0.0);
        }

    // missing packs fail fast
    CHECK_THROWS_AS(run(model, cfg, &k_ma, nullptr, &lap, p), std::invalid_argument);
    CHECK_THROWS_AS(run(model, cfg, &k_ma, &dict, nullptr, p), std::invalid_argument);
    ReconConfig nok = cfg;
    nok.algorithm = Algorithm::kem;
    CHECK_THROWS_AS(run(model, nok, nullptr, nullptr, nullptr, p), std::invalid_argument);
}
