#pragma once

/// Umbrella header for the EPR slit-scan simulator.

#include "eprsim/common.hpp"
#include "eprsim/model.hpp"
#include "eprsim/fft.hpp"
#include "eprsim/grid.hpp"
#include "eprsim/amplitude.hpp"
#include "eprsim/density.hpp"
#include "eprsim/random.hpp"
#include "eprsim/apparatus.hpp"
#include "eprsim/criteria.hpp"
#include "eprsim/config.hpp"
#include "eprsim/pipeline.hpp"
