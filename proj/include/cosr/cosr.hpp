#pragma once

#include "cosr/calibration.hpp"
#include "cosr/config.hpp"
#include "cosr/deployment.hpp"
#include "cosr/experiment.hpp"
#include "cosr/grouping.hpp"
#include "cosr/mac.hpp"
#include "cosr/metrics.hpp"
#include "cosr/params.hpp"
#include "cosr/phy.hpp"
#include "cosr/rng.hpp"
#include "cosr/traffic.hpp"
