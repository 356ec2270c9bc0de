// Copyright 2026 The li-qt Authors
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

#include "liqt/error.hpp"
#include "liqt/rng.hpp"
#include "liqt/vec3.hpp"
#include "liqt/inference.hpp"
#include "liqt/sg.hpp"
#include "liqt/eprb.hpp"
#include "liqt/separation.hpp"
#include "liqt/differentiation.hpp"
#include "liqt/wave.hpp"
#include "liqt/io.hpp"
