#pragma once

// Core library: everything except the command-line layer in sphfield/cli/.

#include "sphfield/clt.hpp"
#include "sphfield/errors.hpp"
#include "sphfield/estimators.hpp"
#include "sphfield/harmonics.hpp"
#include "sphfield/legendre.hpp"
#include "sphfield/operators.hpp"
#include "sphfield/parallel.hpp"
#include "sphfield/rng.hpp"
#include "sphfield/sampler.hpp"
#include "sphfield/spectral_model.hpp"
#include "sphfield/stats.hpp"
#include "sphfield/version.hpp"
