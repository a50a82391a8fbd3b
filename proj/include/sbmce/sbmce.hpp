// SPDX-License-Identifier: Apache-2.0
//
// sbmce: score-based MIMO channel estimation
// Copyright (C) 2026 sbmce contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Convenience header pulling in the whole library.

#pragma once

#include "binary_io.hpp"
#include "channel.hpp"
#include "cli.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "eval.hpp"
#include "gmm.hpp"
#include "numerics.hpp"
#include "schedule.hpp"
#include "scorenet.hpp"
#include "training.hpp"
