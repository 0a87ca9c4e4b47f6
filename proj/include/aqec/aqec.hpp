#pragma once

#include "aqec/geom3.hpp"
#include "aqec/channel.hpp"
#include "aqec/codes.hpp"
#include "aqec/rng.hpp"
#include "aqec/angle_estimator.hpp"
#include "aqec/grid_estimator.hpp"
#include "aqec/simulation.hpp"
#include "aqec/analysis.hpp"
#include "aqec/config.hpp"
#include "aqec/io.hpp"
