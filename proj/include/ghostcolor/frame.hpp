#pragma once

#include <cstdint>

#include "ghostcolor/image.hpp"

namespace ghostcolor {

/// One realization: the reference-arm intensity image and the bucket scalar,
/// both produced from the same speckle mask.
struct FrameRecord {
  std::uint64_t frame_index = 0;
  Map reference;
  double bucket = 0.0;
};

}  // namespace ghostcolor
