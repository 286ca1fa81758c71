#pragma once

#include "scenesum/baselines.hpp"
#include "scenesum/clustering.hpp"
#include "scenesum/dataset.hpp"
#include "scenesum/error.hpp"
#include "scenesum/features.hpp"
#include "scenesum/matrix.hpp"
#include "scenesum/metrics.hpp"
#include "scenesum/pipeline.hpp"
#include "scenesum/selector.hpp"
#include "scenesum/summary.hpp"
#include "scenesum/svg.hpp"
