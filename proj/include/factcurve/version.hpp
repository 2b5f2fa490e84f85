#pragma once

#define FACTCURVE_VERSION_MAJOR 0
#define FACTCURVE_VERSION_MINOR 1
#define FACTCURVE_VERSION_PATCH 0
#define FACTCURVE_VERSION "0.1.0"

namespace factcurve {

inline const char* version() { return FACTCURVE_VERSION; }

} // namespace factcurve
