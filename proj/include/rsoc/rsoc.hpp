#pragma once

#include "rsoc/hamiltonians.hpp"
#include "rsoc/io.hpp"
#include "rsoc/lq_coeffs.hpp"
#include "rsoc/noise.hpp"
#include "rsoc/ode.hpp"
#include "rsoc/params.hpp"
#include "rsoc/philox.hpp"
#include "rsoc/portfolio.hpp"
#include "rsoc/problem.hpp"
#include "rsoc/risk_cost.hpp"
#include "rsoc/sde.hpp"
#include "rsoc/time_grid.hpp"
