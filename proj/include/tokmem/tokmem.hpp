// Copyright (c) 2026, The tokmem Authors. All rights reserved.
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

#include "tokmem/bench.hpp"
#include "tokmem/config.hpp"
#include "tokmem/error.hpp"
#include "tokmem/long_memory.hpp"
#include "tokmem/short_memory.hpp"
#include "tokmem/snapshot.hpp"
#include "tokmem/stream.hpp"
#include "tokmem/token.hpp"
