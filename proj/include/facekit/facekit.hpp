#pragma once

#include "facekit/common.hpp"
#include "facekit/embedding.hpp"
#include "facekit/ensemble.hpp"
#include "facekit/evalproto.hpp"
#include "facekit/experiments.hpp"
#include "facekit/feature_store.hpp"
#include "facekit/synth.hpp"
#include "facekit/types.hpp"
