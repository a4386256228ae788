/*
 * Copyright 2026 The MACQ Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "macq/baselines.hpp"
#include "macq/dataset.hpp"
#include "macq/derivatives.hpp"
#include "macq/distortion.hpp"
#include "macq/engine.hpp"
#include "macq/error.hpp"
#include "macq/mlp.hpp"
#include "macq/pipeline.hpp"
#include "macq/plots.hpp"
#include "macq/model.hpp"
#include "macq/model_io.hpp"
#include "macq/quantile.hpp"
#include "macq/reference.hpp"
#include "macq/report.hpp"
#include "macq/rng.hpp"
#include "macq/smoother.hpp"
#include "macq/synthetic.hpp"
#include "macq/training.hpp"
