#pragma once

#include "scalebench/analysis.hpp"
#include "scalebench/datagen.hpp"
#include "scalebench/errors.hpp"
#include "scalebench/harness.hpp"
#include "scalebench/kernels.hpp"
#include "scalebench/parallel.hpp"
#include "scalebench/placement.hpp"
#include "scalebench/policy.hpp"
#include "scalebench/report.hpp"
#include "scalebench/results.hpp"
#include "scalebench/sweep.hpp"
#include "scalebench/thread_pool.hpp"
