#include <doctest.h>

#include "inspector/error.hpp"
#include "inspector/logistic.hpp"
#include "inspector/metrics.hpp"
#include "oracles/oracles.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace inspector;
using inspector::testing::gaussian_matrix;
using inspector::testing::overlap_dataset;

TEST_CASE("separable 1-D data") {
    Eigen::MatrixXd x(20, 1);
    std::vector<int> y(20);
    for (int i = 0; i < 20; ++i) {
        y[i] = i % 2;
        x(i, 0) = y[i] ? 1.0 : -1.0;
    }
    const auto probe = fit_logistic_probe(x, y);
    CHECK(probe.weights.rows() == 1);
    CHECK(probe.weights(0, 0) > 0);
    CHECK(std::abs(probe.bias[0]) < 1e-6);
    CHECK(probe.predict(x) == y);
}

TEST_CASE("objective matches a damped-Newton reference") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Eigen::MatrixXd x;
        std::vector<int> y;
        overlap_dataset(seed, x, y);
        const auto probe = fit_logistic_probe(x, y, LogisticOptions{1.0, false, 1e-8, 1000});
        REQUIRE(probe.converged);

        Eigen::VectorXd t(20), s = Eigen::VectorXd::Ones(20);
        for (int i = 0; i < 20; ++i) t[i] = y[i];
        double ref = 0;
        const auto theta = oracle::newton_logistic(x, t, s, 1.0, &ref);

        Eigen::VectorXd params(3);
        params << probe.weights(0, 0), probe.weights(0, 1), probe.bias[0];
        const double mine = logistic_objective(x, t, s, 1.0, params, nullptr);
        CHECK(std::abs(mine - ref) <= 1e-6);
        CHECK(std::abs(oracle::logistic_value(x, t, s, 1.0, params) - mine) <= 1e-12);

        Eigen::MatrixXd xa(20, 3);
        xa << x, Eigen::VectorXd::Ones(20);
        const Eigen::VectorXd z = xa * theta;
        std::vector<int> ref_pred(20);
        for (int i = 0; i < 20; ++i) ref_pred[i] = z[i] > 0 ? 1 : 0;
        CHECK(probe.predict(x) == ref_pred);
    }
}

TEST_CASE("weighted objective matches the reference under balanced weights") {
    Eigen::MatrixXd x = gaussian_matrix(30, 3, 77);
    std::vector<int> y(30, 0);
    for (int i = 0; i < 8; ++i) {
        y[i] = 1;
        x(i, 1) += 1.0;
    }
    const auto probe = fit_logistic_probe(x, y, LogisticOptions{0.5, true, 1e-10, 1000});
    const auto cw = balanced_class_weights(y);
    Eigen::VectorXd t(30), s(30);
    for (int i = 0; i < 30; ++i) {
        t[i] = y[i];
        s[i] = cw.at(y[i]);
    }
    double ref = 0;
    oracle::newton_logistic(x, t, s, 0.5, &ref);
    Eigen::VectorXd params(4);
    params << probe.weights.row(0).transpose(), probe.bias[0];
    CHECK(std::abs(logistic_objective(x, t, s, 0.5, params, nullptr) - ref) <= 1e-6);
}

TEST_CASE("objective gradient matches finite differences") {
    const auto x = gaussian_matrix(15, 4, 3);
    Eigen::VectorXd t(15), s(15);
    for (int i = 0; i < 15; ++i) {
        t[i] = i % 3 == 0;
        s[i] = 0.5 + 0.1 * i;
    }
    const Eigen::VectorXd p = gaussian_matrix(5, 1, 4).col(0);
    Eigen::VectorXd g;
    logistic_objective(x, t, s, 2.0, p, &g);
    for (int k = 0; k < 5; ++k) {
        Eigen::VectorXd hi = p, lo = p;
        hi[k] += 1e-6;
        lo[k] -= 1e-6;
        const double fd =
            (logistic_objective(x, t, s, 2.0, hi, nullptr) - logistic_objective(x, t, s, 2.0, lo, nullptr)) / 2e-6;
        CHECK(std::abs(fd - g[k]) < 1e-5 * std::max(1.0, std::abs(g[k])));
    }
}

TEST_CASE("convexity oracle") {
    Eigen::MatrixXd x;
    std::vector<int> y;
    overlap_dataset(9, x, y);
    const auto probe = fit_logistic_probe(x, y);
    Eigen::VectorXd t(20), s = Eigen::VectorXd::Ones(20);
    for (int i = 0; i < 20; ++i) t[i] = y[i];
    Eigen::VectorXd params(3), grad;
    params << probe.weights(0, 0), probe.weights(0, 1), probe.bias[0];
    const double at_solution = logistic_objective(x, t, s, 1.0, params, &grad);
    CHECK(at_solution <= logistic_objective(x, t, s, 1.0, Eigen::VectorXd::Zero(3), nullptr));
    if (probe.converged) CHECK(grad.lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("balanced class weights") {
    const auto w = balanced_class_weights(std::vector<int>{0, 0, 0, 1});
    CHECK(w.at(0) == doctest::Approx(4.0 / 6.0));
    CHECK(w.at(1) == doctest::Approx(2.0));
}

TEST_CASE("probabilities and tie-breaking") {
    LogisticProbe zero;
    zero.weights = Eigen::MatrixXd::Zero(1, 3);
    zero.bias = Eigen::VectorXd::Zero(1);
    zero.classes = {0, 1};
    const auto x = gaussian_matrix(4, 3, 1);
    const auto p = zero.predict_proba(x);
    CHECK(p.cwiseAbs().maxCoeff() == 0.5);
    CHECK(zero.predict(x) == std::vector<int>{0, 0, 0, 0});

    LogisticProbe three;
    three.weights = gaussian_matrix(3, 3, 2);
    three.bias = gaussian_matrix(3, 1, 3).col(0);
    three.classes = {1, 2, 3};
    three.one_vs_rest = true;
    const auto q = three.predict_proba(gaussian_matrix(20, 3, 4));
    CHECK((q.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(q.minCoeff() > 0);
    CHECK(q.maxCoeff() < 1);

    Eigen::MatrixXd scores(2, 3);
    scores << 1, 1, 0, 0.2, 0.5, 0.5;
    CHECK(argmax_labels(scores, std::vector<int>{7, 8, 9}) == std::vector<int>{7, 8});
    CHECK(argmax_labels(3.0 * scores, std::vector<int>{7, 8, 9}) == std::vector<int>{7, 8});
}

TEST_CASE("multiclass probe separates three blobs") {
    Eigen::MatrixXd x = gaussian_matrix(90, 2, 6) * 0.3;
    std::vector<int> y(90);
    for (int i = 0; i < 90; ++i) {
        y[i] = 1 + i % 3;
        x(i, 0) += std::cos(2.1 * y[i]) * 3;
        x(i, 1) += std::sin(2.1 * y[i]) * 3;
    }
    const auto probe = fit_logistic_probe(x, y);
    CHECK(probe.one_vs_rest);
    CHECK(probe.weights.rows() == 3);
    CHECK(compute_metrics(y, probe.predict(x)).accuracy == 1.0);
}

TEST_CASE("probe input errors") {
    const auto x = gaussian_matrix(4, 2, 1);
    CHECK_THROWS_AS(fit_logistic_probe(x, std::vector<int>{1, 1, 1, 1}), Error);
    Eigen::MatrixXd bad = x;
    bad(0, 0) = NAN;
    CHECK_THROWS_AS(fit_logistic_probe(bad, std::vector<int>{0, 1, 0, 1}), Error);
    const auto probe = fit_logistic_probe(x, std::vector<int>{0, 1, 0, 1});
    CHECK_THROWS_AS(probe.predict(gaussian_matrix(2, 3, 1)), Error);
}
