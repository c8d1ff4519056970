#pragma once

#include "nsquant/analysis.hpp"
#include "nsquant/bandwidth.hpp"
#include "nsquant/curve.hpp"
#include "nsquant/errors.hpp"
#include "nsquant/experiment.hpp"
#include "nsquant/inference.hpp"
#include "nsquant/kernels.hpp"
#include "nsquant/nuisance.hpp"
#include "nsquant/numerics.hpp"
#include "nsquant/parallel.hpp"
#include "nsquant/quantreg.hpp"
#include "nsquant/rng.hpp"
#include "nsquant/simulate.hpp"
#include "nsquant/stable.hpp"
#include "nsquant/version.hpp"
