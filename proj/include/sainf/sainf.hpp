#pragma once

// Umbrella header.
#include "sainf/bootstrap.hpp"
#include "sainf/config.hpp"
#include "sainf/critical_values.hpp"
#include "sainf/experiment.hpp"
#include "sainf/inference.hpp"
#include "sainf/linalg.hpp"
#include "sainf/markov_streams.hpp"
#include "sainf/mdp.hpp"
#include "sainf/optimal_alpha.hpp"
#include "sainf/oracles.hpp"
#include "sainf/parallel.hpp"
#include "sainf/rng.hpp"
#include "sainf/sa_engine.hpp"
#include "sainf/step_schedule.hpp"
