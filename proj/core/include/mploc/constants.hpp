// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace mploc {

inline constexpr double speed_of_light = 299'792'458.0; // m/s

} // namespace mploc
