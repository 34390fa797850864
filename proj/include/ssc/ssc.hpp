#pragma once

// Umbrella header for the smooth-sparse-coding library.

#include "ssc/bench.hpp"
#include "ssc/coding.hpp"
#include "ssc/core.hpp"
#include "ssc/dictionary.hpp"
#include "ssc/features.hpp"
#include "ssc/io.hpp"
#include "ssc/kernels.hpp"
#include "ssc/theory.hpp"
#include "ssc/trainer.hpp"
