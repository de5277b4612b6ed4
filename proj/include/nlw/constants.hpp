#pragma once

// Frozen k_d. Regenerate with `nlwlab eigen --out data/kd_constants.txt` (default
// settings); the text below must match that file byte for byte, which a test checks.

#include <string>

#include "nlw/io.hpp"

namespace nlw {

inline constexpr const char* frozen_constants_text = R"(# k_d constants: -Delta - 5 W^4 has the single negative eigenvalue -k_d^2
k_d = 1.1001672167330303
k_d_tridiagonal_coarse = 1.1001773138469095
k_d_tridiagonal_fine = 1.1001697410201878
k_d_shooting = 1.1001672168077024
relative_difference = 6.787336068850109e-11
negative_eigenvalues = 1
eigen_residual_l2 = 8.4918961818212847e-12
scaling_mode_overlap = 7.4994149138896513e-06
r_max = 40
n_coarse = 4096
n_fine = 8192
shooting_step = 0.001
shooting_tol = 1e-13
)";

/// Richardson-extrapolated tridiagonal value; agrees with the shooting value to ~1e-10.
inline constexpr double frozen_k_d = 1.1001672167330303;

inline std::string constants_hash() { return fnv1a_hex(frozen_constants_text); }

}  // namespace nlw
