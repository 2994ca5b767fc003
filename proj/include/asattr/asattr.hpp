// Copyright 2026 The asattr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header for the library. The CLI lives in asattr/cli.hpp and needs
// CLI11 in addition.

#pragma once

#include "asattr/attribution.hpp"
#include "asattr/baselines.hpp"
#include "asattr/core.hpp"
#include "asattr/io.hpp"
#include "asattr/panel.hpp"
#include "asattr/ranks.hpp"
#include "asattr/scalingbias.hpp"
#include "asattr/study.hpp"
#include "asattr/valuefn.hpp"
