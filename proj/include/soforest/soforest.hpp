#pragma once

#include "soforest/bench.hpp"
#include "soforest/calibrate.hpp"
#include "soforest/dataset.hpp"
#include "soforest/forest.hpp"
#include "soforest/histogram.hpp"
#include "soforest/model_io.hpp"
#include "soforest/parallel.hpp"
#include "soforest/projection.hpp"
#include "soforest/random.hpp"
#include "soforest/split.hpp"
#include "soforest/timing.hpp"
