#pragma once

#include "pacr/bottomup.hpp"
#include "pacr/dsl.hpp"
#include "pacr/events.hpp"
#include "pacr/graph.hpp"
#include "pacr/harness/estimate.hpp"
#include "pacr/harness/parallel.hpp"
#include "pacr/harness/report.hpp"
#include "pacr/harness/synthetic.hpp"
#include "pacr/harness/tasks.hpp"
#include "pacr/rng.hpp"
#include "pacr/stats.hpp"
#include "pacr/topdown.hpp"
#include "pacr/value.hpp"
#include "pacr/version.hpp"
