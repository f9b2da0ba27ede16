#pragma once

// Everything: operators, sampler, solvers, oracle, problem families,
// complex embedding, experiment harness and figure presets.

#include "rayq/error.hpp"
#include "rayq/rng.hpp"
#include "rayq/linalg.hpp"
#include "rayq/matrix_io.hpp"
#include "rayq/sampling.hpp"
#include "rayq/trace.hpp"
#include "rayq/oracle.hpp"
#include "rayq/algorithms.hpp"
#include "rayq/complexify.hpp"
#include "rayq/problems.hpp"
#include "rayq/aggregate.hpp"
#include "rayq/svg.hpp"
#include "rayq/harness.hpp"
#include "rayq/figures.hpp"
