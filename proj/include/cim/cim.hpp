/* Copyright 2026 The CIM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
=============================================================================*/

#pragma once

#include "cim/error.hpp"
#include "cim/fla.hpp"
#include "cim/image_io.hpp"
#include "cim/mapping.hpp"
#include "cim/npy.hpp"
#include "cim/pipeline.hpp"
#include "cim/solver.hpp"
#include "cim/tensor_io.hpp"
#include "cim/types.hpp"
#include "cim/synthetic.hpp"
