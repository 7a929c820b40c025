#ifndef DSS_VERSION_HPP
#define DSS_VERSION_HPP

namespace dss {

inline constexpr const char* toolkit_version = "0.1.0";

}

#endif
