#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include <Eigen/Dense>

namespace inspector::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("inspector_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path_.string(); }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = n(rng);
    return m;
}

// Two Gaussian blobs separated along the first axis.
inline void two_blobs(int per_class, int cols, double gap, std::uint64_t seed, Eigen::MatrixXd& x,
                      std::vector<int>& y) {
    x = gaussian_matrix(2 * per_class, cols, seed);
    y.assign(2 * per_class, 0);
    for (int i = 0; i < 2 * per_class; ++i) {
        y[i] = i % 2;
        x(i, 0) += y[i] ? gap / 2 : -gap / 2;
    }
}

// Seeded 20x2 dataset with overlapping classes so the optimum is interior.
inline void overlap_dataset(std::uint64_t seed, Eigen::MatrixXd& x, std::vector<int>& y) {
    x = gaussian_matrix(20, 2, seed);
    std::mt19937_64 rng(seed + 100);
    std::bernoulli_distribution coin(0.5);
    y.resize(20);
    for (int i = 0; i < 20; ++i) {
        y[i] = i < 10 ? 0 : 1;
        x(i, 0) += y[i] ? 0.8 : -0.8;
        if (coin(rng) && i % 7 == 0) y[i] = 1 - y[i];
    }
}

inline std::vector<int> iota_rows(int n) {
    std::vector<int> r(n);
    for (int i = 0; i < n; ++i) r[i] = i;
    return r;
}

}  // namespace inspector::testing
