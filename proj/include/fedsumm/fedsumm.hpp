/*
 * Copyright 2026 The fedsumm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "fedsumm/bench.hpp"
#include "fedsumm/clustering.hpp"
#include "fedsumm/coreset.hpp"
#include "fedsumm/dataset.hpp"
#include "fedsumm/embedder.hpp"
#include "fedsumm/error.hpp"
#include "fedsumm/fdsm.hpp"
#include "fedsumm/matrix.hpp"
#include "fedsumm/parallel.hpp"
#include "fedsumm/population.hpp"
#include "fedsumm/rng.hpp"
#include "fedsumm/simulation.hpp"
#include "fedsumm/summary.hpp"
