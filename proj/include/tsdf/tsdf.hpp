// Copyright 2026 The tsdf Authors
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

#pragma once

#include "tsdf/accelgen.hpp"
#include "tsdf/dsl.hpp"
#include "tsdf/error.hpp"
#include "tsdf/graph.hpp"
#include "tsdf/io.hpp"
#include "tsdf/mapper.hpp"
#include "tsdf/platform.hpp"
#include "tsdf/sim.hpp"
#include "tsdf/verifier.hpp"
