#pragma once

#include "ghostcolor/checkpoint.hpp"
#include "ghostcolor/config.hpp"
#include "ghostcolor/correlator.hpp"
#include "ghostcolor/harness.hpp"
#include "ghostcolor/image.hpp"
#include "ghostcolor/image_io.hpp"
#include "ghostcolor/metrics.hpp"
#include "ghostcolor/optics.hpp"
#include "ghostcolor/spectral.hpp"

namespace ghostcolor {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ghostcolor
