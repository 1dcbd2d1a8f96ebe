#pragma once

#include "lio/core.hpp"
#include "lio/quadrature.hpp"
#include "lio/grid.hpp"
#include "lio/kernels.hpp"
#include "lio/weights.hpp"
#include "lio/discretization.hpp"
#include "lio/sequences.hpp"
#include "lio/localization.hpp"
#include "lio/stability.hpp"
#include "lio/report_io.hpp"
#include "lio/config.hpp"
#include "lio/acceptance.hpp"
#include "lio/commands.hpp"
