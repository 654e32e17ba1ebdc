#pragma once

// Umbrella header: the whole library.
#include "perfest/analysis.hpp"
#include "perfest/config.hpp"
#include "perfest/distributions.hpp"
#include "perfest/engine.hpp"
#include "perfest/stats.hpp"
#include "perfest/svg.hpp"
#include "perfest/workflow.hpp"
