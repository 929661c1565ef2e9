#pragma once

#include "stagesurv/calibrate.hpp"
#include "stagesurv/counterfactual.hpp"
#include "stagesurv/dataio.hpp"
#include "stagesurv/exact.hpp"
#include "stagesurv/model.hpp"
#include "stagesurv/montecarlo.hpp"
#include "stagesurv/simplex.hpp"
