#pragma once

#include "lsmrn/baselines.hpp"
#include "lsmrn/data.hpp"
#include "lsmrn/errors.hpp"
#include "lsmrn/experiments.hpp"
#include "lsmrn/global_learning.hpp"
#include "lsmrn/graph.hpp"
#include "lsmrn/incremental.hpp"
#include "lsmrn/io.hpp"
#include "lsmrn/metrics.hpp"
#include "lsmrn/model.hpp"
