// SPDX-License-Identifier: Apache-2.0
//
// rfidalign - RFID phase-based coil alignment simulator and estimator
// ------------------------------------------------------------------------

#pragma once

#include "rfidalign/errors.hpp"
#include "rfidalign/geometry.hpp"
#include "rfidalign/grid.hpp"
#include "rfidalign/log_io.hpp"
#include "rfidalign/mle_estimator.hpp"
#include "rfidalign/phase_model.hpp"
#include "rfidalign/pipeline.hpp"
#include "rfidalign/read_simulator.hpp"
#include "rfidalign/rng.hpp"
#include "rfidalign/scenario.hpp"
