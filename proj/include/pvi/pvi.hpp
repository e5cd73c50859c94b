#pragma once

#include "pvi/config.hpp"
#include "pvi/dataset.hpp"
#include "pvi/dynamics.hpp"
#include "pvi/errors.hpp"
#include "pvi/estimators.hpp"
#include "pvi/experiment.hpp"
#include "pvi/kernels.hpp"
#include "pvi/matrix.hpp"
#include "pvi/metrics.hpp"
#include "pvi/nn.hpp"
#include "pvi/numerics.hpp"
#include "pvi/oracle.hpp"
#include "pvi/recipes.hpp"
#include "pvi/rng.hpp"
#include "pvi/targets.hpp"
