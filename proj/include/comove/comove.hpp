#pragma once

#include "comove/changepoint.hpp"
#include "comove/date.hpp"
#include "comove/dependence.hpp"
#include "comove/distributions.hpp"
#include "comove/error.hpp"
#include "comove/herding.hpp"
#include "comove/ingest.hpp"
#include "comove/regression.hpp"
#include "comove/stat_tests.hpp"
#include "comove/version.hpp"
