#pragma once

// Umbrella header.

#include "kob/core.hpp"
#include "kob/descriptor.hpp"
#include "kob/distance.hpp"
#include "kob/domain.hpp"
#include "kob/experiment.hpp"
#include "kob/geodesic.hpp"
#include "kob/gromov.hpp"
#include "kob/interval.hpp"
#include "kob/ledger.hpp"
#include "kob/metric.hpp"
#include "kob/path.hpp"
#include "kob/rng.hpp"
#include "kob/scenario.hpp"
