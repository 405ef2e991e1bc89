// Copyright 2026 The lcslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#pragma once

#include "lcslab/ad/nn.hpp"
#include "lcslab/ad/ops.hpp"
#include "lcslab/ad/param_store.hpp"
#include "lcslab/ad/tape.hpp"
#include "lcslab/core/dataset.hpp"
#include "lcslab/core/normalize.hpp"
#include "lcslab/core/subset.hpp"
#include "lcslab/core/types.hpp"
#include "lcslab/error.hpp"
#include "lcslab/experiment.hpp"
#include "lcslab/graph/graph.hpp"
#include "lcslab/graph/object_graph.hpp"
#include "lcslab/matrix.hpp"
#include "lcslab/metrics/metrics.hpp"
#include "lcslab/models/aggregate.hpp"
#include "lcslab/models/graclus.hpp"
#include "lcslab/models/graph_conv.hpp"
#include "lcslab/models/models.hpp"
#include "lcslab/rng.hpp"
#include "lcslab/segment/disjoint_set.hpp"
#include "lcslab/segment/segmentation.hpp"
#include "lcslab/synth/landscape.hpp"
#include "lcslab/train/pipeline.hpp"
#include "lcslab/train/trainer.hpp"
