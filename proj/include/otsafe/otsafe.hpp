#pragma once

#include "otsafe/core.hpp"
#include "otsafe/ot.hpp"
#include "otsafe/action_dist.hpp"
#include "otsafe/uncertainty.hpp"
#include "otsafe/envs.hpp"
#include "otsafe/agents.hpp"
#include "otsafe/chain.hpp"
#include "otsafe/config.hpp"
#include "otsafe/harness.hpp"
#include "otsafe/selftest.hpp"
