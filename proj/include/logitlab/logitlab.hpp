#pragma once

#include "logitlab/bounds.hpp"
#include "logitlab/config.hpp"
#include "logitlab/csv.hpp"
#include "logitlab/dgp.hpp"
#include "logitlab/experiment.hpp"
#include "logitlab/interpret.hpp"
#include "logitlab/matrix.hpp"
#include "logitlab/metrics.hpp"
#include "logitlab/model.hpp"
#include "logitlab/numerics.hpp"
#include "logitlab/rng.hpp"
#include "logitlab/tabular.hpp"
#include "logitlab/train.hpp"
