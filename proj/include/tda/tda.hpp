#pragma once

#include "tda/error.hpp"
#include "tda/rng.hpp"
#include "tda/image.hpp"
#include "tda/png_io.hpp"
#include "tda/text.hpp"
#include "tda/bias_metrics.hpp"
#include "tda/augment.hpp"
#include "tda/policy.hpp"
#include "tda/assets.hpp"
#include "tda/dataset.hpp"
#include "tda/synth.hpp"
#include "tda/model.hpp"
#include "tda/trainer.hpp"
#include "tda/cbi.hpp"
#include "tda/experiment.hpp"
