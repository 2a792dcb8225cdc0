#pragma once

#include "gtboost/common.hpp"
#include "gtboost/dataset.hpp"
#include "gtboost/splitcore.hpp"
#include "gtboost/grouptest.hpp"
#include "gtboost/boosting.hpp"
#include "gtboost/metrics.hpp"
#include "gtboost/experiments.hpp"
