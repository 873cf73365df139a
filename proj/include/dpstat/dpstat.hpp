#pragma once

// Umbrella header for the dpstat library.

#include "dpstat/config.hpp"
#include "dpstat/distributions.hpp"
#include "dpstat/errors.hpp"
#include "dpstat/experiments.hpp"
#include "dpstat/format.hpp"
#include "dpstat/functionals.hpp"
#include "dpstat/interval.hpp"
#include "dpstat/mechanisms.hpp"
#include "dpstat/mestimation.hpp"
#include "dpstat/report.hpp"
#include "dpstat/rng.hpp"
#include "dpstat/runner.hpp"
#include "dpstat/sensitivity.hpp"
