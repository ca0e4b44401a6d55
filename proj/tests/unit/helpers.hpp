#pragma once

#include "maskfdia/data.hpp"
#include "maskfdia/rng.hpp"
#include "maskfdia/tensor.hpp"

#include <filesystem>
#include <string>

namespace test {

inline maskfdia::Tensor random_matrix(std::size_t rows, std::size_t cols, maskfdia::Rng& rng, double lo = -1.0,
                                      double hi = 1.0) {
    auto t = maskfdia::Tensor::matrix(rows, cols);
    for (double& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

inline maskfdia::TimeSeriesDataset random_dataset(std::size_t length, std::size_t n, maskfdia::Rng& rng) {
    maskfdia::TimeSeriesDataset ds;
    for (std::size_t c = 0; c < n; ++c) ds.channel_names.push_back("c" + std::to_string(c));
    ds.samples = random_matrix(length, n, rng, 0.0, 1.0);
    return ds;
}

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(MASKFDIA_FIXTURE_DIR) / name;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("maskfdia_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace test
