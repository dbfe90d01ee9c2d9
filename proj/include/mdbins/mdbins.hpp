#pragma once

#include "mdbins/config.hpp"
#include "mdbins/core.hpp"
#include "mdbins/errors.hpp"
#include "mdbins/metrics.hpp"
#include "mdbins/oracle.hpp"
#include "mdbins/potentials.hpp"
#include "mdbins/processes.hpp"
#include "mdbins/random.hpp"
#include "mdbins/runners.hpp"
#include "mdbins/trajectory.hpp"
#include "mdbins/harness/csv.hpp"
#include "mdbins/harness/plan.hpp"
#include "mdbins/harness/run.hpp"
