#pragma once

#include "pseudoforge/mask_ops.hpp"

namespace pseudoforge::detail {

DistanceField distance_transform(const BitMask& mask, bool allow_parallel);

}  // namespace pseudoforge::detail
