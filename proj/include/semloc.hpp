#pragma once

// Umbrella header for the semloc visual-localization library.

#include "semloc/config.hpp"
#include "semloc/depth.hpp"
#include "semloc/error.hpp"
#include "semloc/geometry.hpp"
#include "semloc/io.hpp"
#include "semloc/map.hpp"
#include "semloc/matching.hpp"
#include "semloc/pipeline.hpp"
#include "semloc/ransac.hpp"
#include "semloc/retrieval.hpp"
#include "semloc/rng.hpp"
#include "semloc/semantic.hpp"
#include "semloc/solvers.hpp"
#include "semloc/synth.hpp"
