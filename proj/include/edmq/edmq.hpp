#pragma once

// Divergence-maximizing quantizer design on uniform dyadic grids.

#include "edmq/distribution.hpp"
#include "edmq/divergence.hpp"
#include "edmq/error.hpp"
#include "edmq/experiments.hpp"
#include "edmq/flynn_gray.hpp"
#include "edmq/grid.hpp"
#include "edmq/io.hpp"
#include "edmq/random.hpp"
#include "edmq/rdp.hpp"
