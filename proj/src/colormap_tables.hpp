#pragma once

#include <array>

namespace syncot::detail {

extern const std::array<std::array<double, 3>, 256> k_magma;
extern const std::array<std::array<double, 3>, 256> k_cividis;

}  // namespace syncot::detail
