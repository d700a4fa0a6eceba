#pragma once

#include "belman/bandit_env.hpp"
#include "belman/baselines.hpp"
#include "belman/belman.hpp"
#include "belman/errors.hpp"
#include "belman/expfam.hpp"
#include "belman/harness.hpp"
#include "belman/manifold.hpp"
#include "belman/oracles.hpp"
#include "belman/policy.hpp"
#include "belman/queueing.hpp"
#include "belman/rng.hpp"
#include "belman/special_functions.hpp"
