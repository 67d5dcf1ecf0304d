#ifndef NEPPO_NEPPO_HPP
#define NEPPO_NEPPO_HPP

#include "neppo/errors.hpp"
#include "neppo/rng.hpp"
#include "neppo/game.hpp"
#include "neppo/mdp.hpp"
#include "neppo/evaluation.hpp"
#include "neppo/game_io.hpp"
#include "neppo/potential.hpp"
#include "neppo/solvers.hpp"
#include "neppo/algorithm.hpp"
#include "neppo/trace_io.hpp"
#include "neppo/oracles.hpp"
#include "neppo/baselines.hpp"
#include "neppo/commands.hpp"

#endif  // NEPPO_NEPPO_HPP
