#pragma once

// Umbrella header for the MMOT Coulomb solver library.

#include "mmot/assembly.hpp"
#include "mmot/density.hpp"
#include "mmot/diagnostics.hpp"
#include "mmot/errors.hpp"
#include "mmot/ggr.hpp"
#include "mmot/grinit.hpp"
#include "mmot/io.hpp"
#include "mmot/mesh.hpp"
#include "mmot/multistart.hpp"
#include "mmot/pbcd.hpp"
#include "mmot/projection.hpp"
#include "mmot/quadrature.hpp"
#include "mmot/runner.hpp"
