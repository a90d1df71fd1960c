/*
 * Copyright 2026 The gmh Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include "gmh/core.hpp"
#include "gmh/diagnostics.hpp"
#include "gmh/error.hpp"
#include "gmh/io.hpp"
#include "gmh/linalg.hpp"
#include "gmh/log.hpp"
#include "gmh/mappings.hpp"
#include "gmh/pseudo_marginal/kernels.hpp"
#include "gmh/pseudo_marginal/particle_filter.hpp"
#include "gmh/rng.hpp"
#include "gmh/samplers/elliptical.hpp"
#include "gmh/samplers/gibbs.hpp"
#include "gmh/samplers/hamiltonian.hpp"
#include "gmh/samplers/metropolis.hpp"
#include "gmh/samplers/slice.hpp"
#include "gmh/target.hpp"
#include "gmh/targets.hpp"
#include "gmh/toy_models.hpp"
#include "gmh/trace.hpp"
