#include <doctest.h>

#include "inspector/error.hpp"
#include "inspector/features.hpp"
#include "inspector/log.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace inspector;
using doctest::Approx;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("pooling over token rows") {
    Eigen::MatrixXd h(2, 2);
    h << 1, 2, 3, 4;
    CHECK(pool_hidden(h, PoolMode::mean, 2) == vec({2, 3}));
    CHECK(pool_hidden(h, PoolMode::concat, 2) == vec({1, 2, 3, 4, 2, 3}));
    CHECK(pool_hidden(h, PoolMode::min, 2) == vec({1, 2}));
    CHECK(pool_hidden(h, PoolMode::max, 2) == vec({3, 4}));
    Eigen::MatrixXd padded(3, 2);
    padded << 1, 2, 3, 4, 0, 0;
    CHECK(pool_hidden(padded, PoolMode::last, 2) == vec({3, 4}));
    CHECK_THROWS_AS(pool_hidden(Eigen::MatrixXd(0, 2), PoolMode::mean, 1), Error);
    CHECK_THROWS_AS(pool_hidden(h, PoolMode::last, 3), Error);
}

TEST_CASE("pooling linearity and scale equivariance") {
    const auto h = inspector::testing::gaussian_matrix(7, 5, 3);
    const double a = 2.5;
    CHECK((pool_hidden(a * h, PoolMode::mean, 7) - a * pool_hidden(h, PoolMode::mean, 7)).norm() < 1e-12);
    CHECK(pool_hidden(a * h, PoolMode::min, 7) == a * pool_hidden(h, PoolMode::min, 7));
    CHECK(pool_hidden(a * h, PoolMode::max, 7) == a * pool_hidden(h, PoolMode::max, 7));
}

TEST_CASE("attention entropy") {
    for (int s : {2, 4, 16}) {
        const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(s, s, 1.0 / s);
        CHECK(std::abs(attention_entropy(uniform) - std::log(static_cast<double>(s))) <= 1e-6);
        const Eigen::MatrixXd one_hot = Eigen::MatrixXd::Identity(s, s);
        CHECK(std::abs(attention_entropy(one_hot)) <= 1e-6);
    }
    Eigen::MatrixXd neg(2, 2);
    neg << 1.5, -0.5, 0.5, 0.5;
    CHECK_THROWS_AS(attention_entropy(neg), Error);
    Eigen::MatrixXd unnormalized(2, 2);
    unnormalized << 0.5, 0.4, 0.5, 0.5;
    CHECK_THROWS_AS(attention_entropy(unnormalized), Error);
}

TEST_CASE("attention entropy stays within its bounds on random rows") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        const int s = 2 + trial % 9;
        Eigen::MatrixXd a(s, s);
        for (int i = 0; i < s; ++i) {
            for (int j = 0; j < s; ++j) a(i, j) = u(rng);
            a.row(i) /= a.row(i).sum();
        }
        const double e = attention_entropy(a);
        CHECK(e >= -s * kEntropyEpsilon * std::abs(std::log(kEntropyEpsilon)));
        CHECK(e <= std::log(static_cast<double>(s)) + 1e-9);
    }
}

TEST_CASE("head summary") {
    const std::vector<double> e{1, 2, 3};
    const auto s = attention_summary(e);
    CHECK(s.mean == Approx(2.0));
    CHECK(s.std == Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
    CHECK(s.max == 3.0);
    const auto c = attention_summary(std::vector<double>{0.7, 0.7, 0.7});
    CHECK(c.std <= 1e-15);
    CHECK(c.max == Approx(c.mean));
    const auto one = attention_summary(std::vector<double>{4.2});
    CHECK(one.mean == 4.2);
    CHECK(one.std == 0.0);
    CHECK_THROWS_AS(attention_summary(std::vector<double>{}), Error);
}

TEST_CASE("pooled statistics") {
    const auto s = pooled_stats(std::vector<double>{3, 4});
    CHECK(s.norm == Approx(5.0));
    CHECK(s.var == Approx(0.25));
    const auto u = pooled_stats(std::vector<double>(6, 1.3));
    CHECK(u.entropy == Approx(std::log(6.0)));
    // Softmax entropy by direct summation.
    const std::vector<double> r{0.2, -1.0, 2.5, 0.0};
    double z = 0;
    for (double v : r) z += std::exp(v);
    double h = 0;
    for (double v : r) h -= std::exp(v) / z * std::log(std::exp(v) / z);
    CHECK(pooled_stats(r).entropy == Approx(h).epsilon(1e-12));
    CHECK_THROWS_AS(pooled_stats(std::vector<double>{1, NAN}), Error);
}

TEST_CASE("feature assembly widths and labels") {
    const auto data = generate_synthetic_dump(SynthSpec{.num_layers = 2, .hidden_dim = 32, .num_heads = 4, .num_samples = 60, .signal_layer = 2});
    std::vector<int> rows = inspector::testing::iota_rows(60);
    const auto lf = compute_layer_features(data.dump, rows, 1, PoolMode::mean);

    ScopedWarningCapture capture;
    FeatureOptions opts;  // pca 50 + stats + attn
    const auto reducer = fit_block_reducer(lf, rows, opts);
    const auto x = assemble_rows(lf, rows, opts, &reducer);
    CHECK(x.cols() == 32 + 3 + 3);
    CHECK(capture.contains("clamped"));
    CHECK(x.column_labels.front().rfind("pca:", 0) == 0);
    CHECK(x.column_labels[32] == "stat:norm");
    CHECK(x.column_labels[35] == "attn:mean");

    const auto raw = assemble_features(data.dump, 1, PoolMode::mean, FeatureOptions{false, 50, false, false});
    CHECK(raw.cols() == 32);
    CHECK(raw.column_labels[0].rfind("pool:mean:", 0) == 0);
    CHECK(assemble_features(data.dump, 1, PoolMode::concat, FeatureOptions{false, 50, true, false}).cols() == 99);

    CHECK_THROWS_AS(assemble_rows(lf, rows, opts, nullptr), Error);
    CHECK_THROWS_AS(compute_layer_features(data.dump, rows, 3, PoolMode::mean), Error);
}

TEST_CASE("default PCA width on a wide model") {
    const auto data = generate_synthetic_dump(SynthSpec{.num_layers = 1, .hidden_dim = 64, .num_heads = 2, .num_samples = 120, .signal_layer = 1});
    const auto rows = inspector::testing::iota_rows(120);
    const auto lf = compute_layer_features(data.dump, rows, 1, PoolMode::mean);
    FeatureOptions opts;
    opts.include_stats = opts.include_attention = false;
    const auto reducer = fit_block_reducer(lf, rows, opts);
    CHECK(assemble_rows(lf, rows, opts, &reducer).cols() == kDefaultPcaDim);
}

TEST_CASE("assembly is deterministic and serial equals parallel") {
    const auto data = generate_synthetic_dump(SynthSpec{.num_layers = 3, .hidden_dim = 8, .num_heads = 2, .num_samples = 50, .signal_layer = 2});
    const auto rows = inspector::testing::iota_rows(50);
    const auto a = compute_layer_features(data.dump, rows, 2, PoolMode::concat, Execution::serial);
    const auto b = compute_layer_features(data.dump, rows, 2, PoolMode::concat, Execution::parallel);
    CHECK(a.pooled == b.pooled);
    CHECK(a.stats == b.stats);
    CHECK(a.attention == b.attention);
    const auto x1 = assemble_features(data.dump, 2, PoolMode::max, FeatureOptions{false, 50, true, true});
    const auto x2 = assemble_features(data.dump, 2, PoolMode::max, FeatureOptions{false, 50, true, true});
    CHECK(x1.values == x2.values);
    CHECK(x1.column_labels == x2.column_labels);
}

TEST_CASE("feature option keys round trip") {
    for (const auto& o : {FeatureOptions{}, FeatureOptions{false, 50, true, false}, FeatureOptions{true, 12, false, true}})
        CHECK(parse_feature_options(o.key()) == o);
    CHECK(FeatureOptions{}.key() == "pca50+stats+attn");
}
