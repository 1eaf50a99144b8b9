#pragma once

#include "alle/data.hpp"
#include "alle/embedding.hpp"
#include "alle/error.hpp"
#include "alle/evaluation.hpp"
#include "alle/metric.hpp"
#include "alle/neighbors.hpp"
#include "alle/pipeline.hpp"
#include "alle/reconstruction.hpp"
