#pragma once

#include "simbank/config.hpp"
#include "simbank/csv.hpp"
#include "simbank/engine.hpp"
#include "simbank/evaluation.hpp"
#include "simbank/interventions.hpp"
#include "simbank/learners.hpp"
#include "simbank/policies.hpp"
#include "simbank/process.hpp"
#include "simbank/protocol.hpp"
#include "simbank/random.hpp"
#include "simbank/runner.hpp"
#include "simbank/server.hpp"
