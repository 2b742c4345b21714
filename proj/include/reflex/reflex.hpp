#pragma once

// Umbrella header for the reflex simulation library.

#include "reflex/analysis.hpp"
#include "reflex/config.hpp"
#include "reflex/cooperation.hpp"
#include "reflex/engine.hpp"
#include "reflex/events.hpp"
#include "reflex/feedback.hpp"
#include "reflex/io.hpp"
#include "reflex/network.hpp"
#include "reflex/neuron.hpp"
#include "reflex/org_log.hpp"
#include "reflex/rng.hpp"
#include "reflex/runner.hpp"
#include "reflex/simulation.hpp"
#include "reflex/tracker.hpp"
#include "reflex/types.hpp"
