#pragma once

#include "maxsketch/error.hpp"
#include "maxsketch/estimator.hpp"
#include "maxsketch/experiment.hpp"
#include "maxsketch/gaussian_max.hpp"
#include "maxsketch/projections.hpp"
#include "maxsketch/readout.hpp"
#include "maxsketch/rng.hpp"
#include "maxsketch/sketch.hpp"
#include "maxsketch/stream_io.hpp"
#include "maxsketch/streamgen.hpp"
#include "maxsketch/verify.hpp"
