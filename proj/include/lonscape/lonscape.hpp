#pragma once

#include "lonscape/config.hpp"
#include "lonscape/core.hpp"
#include "lonscape/encodings.hpp"
#include "lonscape/error.hpp"
#include "lonscape/evaluate.hpp"
#include "lonscape/export.hpp"
#include "lonscape/external_evaluator.hpp"
#include "lonscape/json_io.hpp"
#include "lonscape/lon.hpp"
#include "lonscape/rng.hpp"
#include "lonscape/sampler.hpp"
#include "lonscape/stats.hpp"
