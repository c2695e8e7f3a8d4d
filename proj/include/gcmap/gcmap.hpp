/*
Copyright 2026 The gcmap Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include "gcmap/autodiff.hpp"
#include "gcmap/baselines.hpp"
#include "gcmap/calibration.hpp"
#include "gcmap/condense.hpp"
#include "gcmap/config.hpp"
#include "gcmap/dense.hpp"
#include "gcmap/error.hpp"
#include "gcmap/evaluate.hpp"
#include "gcmap/graph.hpp"
#include "gcmap/graph_io.hpp"
#include "gcmap/inference.hpp"
#include "gcmap/mapping.hpp"
#include "gcmap/optim.hpp"
#include "gcmap/relay.hpp"
#include "gcmap/rng.hpp"
#include "gcmap/sbm.hpp"
#include "gcmap/sparse.hpp"
#include "gcmap/trainer.hpp"
