#pragma once

// Umbrella header for the WDRO solver library.

#include "wdro/approximation.hpp"
#include "wdro/common.hpp"
#include "wdro/config.hpp"
#include "wdro/cost.hpp"
#include "wdro/dual.hpp"
#include "wdro/entropic.hpp"
#include "wdro/grid.hpp"
#include "wdro/instances.hpp"
#include "wdro/measures.hpp"
#include "wdro/objectives.hpp"
#include "wdro/ot.hpp"
#include "wdro/phi.hpp"
#include "wdro/runner.hpp"
#include "wdro/scalar_min.hpp"
#include "wdro/simplex.hpp"
