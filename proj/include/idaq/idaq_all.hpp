#pragma once

#include "idaq/core.hpp"
#include "idaq/mdp.hpp"
#include "idaq/text_format.hpp"
#include "idaq/belief.hpp"
#include "idaq/meta_policy.hpp"
#include "idaq/dataset.hpp"
#include "idaq/trainer.hpp"
#include "idaq/idaq.hpp"
#include "idaq/theory.hpp"
#include "idaq/envs.hpp"
#include "idaq/harness.hpp"
