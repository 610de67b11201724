#pragma once

#include "gossip/balloon.hpp"
#include "gossip/branching.hpp"
#include "gossip/curve.hpp"
#include "gossip/errors.hpp"
#include "gossip/experiments.hpp"
#include "gossip/lattice.hpp"
#include "gossip/limits.hpp"
#include "gossip/parallel.hpp"
#include "gossip/rng.hpp"
#include "gossip/stats.hpp"
#include "gossip/torus.hpp"
