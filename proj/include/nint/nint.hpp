// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header.

#ifndef NINT_NINT_HPP
#define NINT_NINT_HPP

#include "nint/camera.hpp"
#include "nint/common.hpp"
#include "nint/formulation.hpp"
#include "nint/graph.hpp"
#include "nint/io.hpp"
#include "nint/metrics.hpp"
#include "nint/noise.hpp"
#include "nint/solver.hpp"
#include "nint/sparse.hpp"
#include "nint/synth.hpp"

#endif  // NINT_NINT_HPP
