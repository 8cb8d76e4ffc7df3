#pragma once

#include "drcp/conformal.hpp"
#include "drcp/dataset.hpp"
#include "drcp/density_ratio.hpp"
#include "drcp/gaussian_case.hpp"
#include "drcp/harness/csv.hpp"
#include "drcp/harness/experiment.hpp"
#include "drcp/harness/metrics.hpp"
#include "drcp/harness/report.hpp"
#include "drcp/ite.hpp"
#include "drcp/predictors.hpp"
#include "drcp/stats_core.hpp"
#include "drcp/synthetic.hpp"
