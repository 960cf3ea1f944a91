#pragma once

// Umbrella header for the numerical library (Eigen only). The configuration
// and experiment layers live in config_io.hpp and experiment.hpp, which also
// need yaml-cpp and nlohmann/json.

#include "eclares/clarity.hpp"
#include "eclares/domain.hpp"
#include "eclares/env_grid.hpp"
#include "eclares/ergodic.hpp"
#include "eclares/eware.hpp"
#include "eclares/mission.hpp"
#include "eclares/tisd.hpp"
#include "eclares/tracking.hpp"
#include "eclares/trajectory.hpp"
#include "eclares/vehicle.hpp"
