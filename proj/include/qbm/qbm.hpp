// qbm.hpp: umbrella header.

#pragma once

#include "qbm/amplitudes.hpp"
#include "qbm/config.hpp"
#include "qbm/golden_rule.hpp"
#include "qbm/hermitian.hpp"
#include "qbm/langevin.hpp"
#include "qbm/master.hpp"
#include "qbm/model.hpp"
#include "qbm/runner.hpp"
