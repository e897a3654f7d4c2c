#pragma once

#include <array>
#include <string>
#include <string_view>

namespace inspector {

enum class PoolMode { mean, last, min, max, concat };

inline constexpr std::array<PoolMode, 5> kAllPools = {PoolMode::mean, PoolMode::last, PoolMode::min,
                                                       PoolMode::max, PoolMode::concat};

const char* to_string(PoolMode mode);
PoolMode parse_pool_mode(std::string_view text);

// concat = [min; max; mean], so it is three hidden widths wide.
inline int pooled_width(int hidden_dim, PoolMode mode) {
    return mode == PoolMode::concat ? 3 * hidden_dim : hidden_dim;
}

}  // namespace inspector
