#pragma once

#include "lowmach/errors.hpp"
#include "lowmach/grid.hpp"
#include "lowmach/field.hpp"
#include "lowmach/spectral.hpp"
#include "lowmach/constitutive.hpp"
#include "lowmach/state.hpp"
#include "lowmach/dynamics.hpp"
#include "lowmach/timestepper.hpp"
#include "lowmach/diagnostics.hpp"
#include "lowmach/harness.hpp"
#include "lowmach/io.hpp"
