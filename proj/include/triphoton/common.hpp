#ifndef TRIPHOTON_COMMON_HPP
#define TRIPHOTON_COMMON_HPP

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace triphoton {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr cplx imag_unit{0.0, 1.0};

inline std::string version_string() { return "triphoton 0.1.0"; }

} // namespace triphoton

#endif
