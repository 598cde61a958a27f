#pragma once

#include <cstdint>

#include "paneldesign/panel.hpp"

namespace paneldesign {

// Seeded stand-in for the state unemployment panel used by the experiments:
// a persistent national factor, a second cross-cutting factor, and
// unit-level AR noise, all on the scale of monthly unemployment rates.
// Deterministic given the seed, so the bundled CSV can be regenerated.
Panel make_synthetic_urate_panel(int n_units = 50, int n_periods = 40, int t_pre = 35,
                                 std::uint64_t seed = 987654321);

}  // namespace paneldesign
