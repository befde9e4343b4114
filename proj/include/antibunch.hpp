#pragma once

#include "antibunch/units.hpp"
#include "antibunch/numerics.hpp"
#include "antibunch/core_model.hpp"
#include "antibunch/aperture.hpp"
#include "antibunch/parallel.hpp"
#include "antibunch/amplitude.hpp"
#include "antibunch/correlation.hpp"
#include "antibunch/montecarlo.hpp"
#include "antibunch/io.hpp"
#include "antibunch/config.hpp"
#include "antibunch/commands.hpp"
