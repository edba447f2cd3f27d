// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Umbrella header.

#pragma once

#include "ofif/common.hpp"
#include "ofif/layers.hpp"
#include "ofif/model.hpp"
#include "ofif/ofif.hpp"
#include "ofif/stdct.hpp"
#include "ofif/stream.hpp"
#include "ofif/tensor.hpp"
#include "ofif/tfca.hpp"
#include "ofif/tfsm.hpp"
#include "ofif/wav.hpp"
#include "ofif/weights.hpp"
