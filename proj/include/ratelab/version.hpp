#ifndef RATELAB_VERSION_HPP
#define RATELAB_VERSION_HPP

namespace ratelab {
inline constexpr const char* version_string = "ratelab 0.1.0";
}

#endif
