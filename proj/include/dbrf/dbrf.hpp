#pragma once

// Umbrella header.

#include "dbrf/core/adam.hpp"
#include "dbrf/core/checkpoint.hpp"
#include "dbrf/core/common.hpp"
#include "dbrf/core/dense.hpp"
#include "dbrf/core/gaussian.hpp"
#include "dbrf/core/grad_check.hpp"
#include "dbrf/core/losses.hpp"
#include "dbrf/data/corruption.hpp"
#include "dbrf/data/csv.hpp"
#include "dbrf/data/dataset.hpp"
#include "dbrf/data/split.hpp"
#include "dbrf/data/synthetic.hpp"
#include "dbrf/data/tabular.hpp"
#include "dbrf/metrics/fairness.hpp"
#include "dbrf/model/dbrf.hpp"
#include "dbrf/model/params.hpp"
#include "dbrf/model/serialize.hpp"
#include "dbrf/train/trainer.hpp"
#include "dbrf/baselines/baselines.hpp"
#include "dbrf/experiment/config.hpp"
#include "dbrf/experiment/kernel_pca.hpp"
#include "dbrf/experiment/runner.hpp"
#include "dbrf/experiment/svg.hpp"
