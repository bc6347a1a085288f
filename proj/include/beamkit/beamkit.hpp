#pragma once

// Umbrella header pulling in the whole public API.

#include "beamkit/corpus.hpp"
#include "beamkit/decoder.hpp"
#include "beamkit/errors.hpp"
#include "beamkit/eval.hpp"
#include "beamkit/length_predict.hpp"
#include "beamkit/model.hpp"
#include "beamkit/rng.hpp"
#include "beamkit/scoring.hpp"
#include "beamkit/stopping.hpp"
#include "beamkit/types.hpp"
