#pragma once

#include "midline/geometry.hpp"

namespace midline {

/// Decoded box; box.score() is the component score.
struct Detection {
  OrientedBox box;
  BranchId branch = BranchId::Oriented;
};

}  // namespace midline
