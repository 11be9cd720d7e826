/* Copyright 2026 The UDOS Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <memory>

#include "udos/dataset.hpp"
#include "udos/detector.hpp"
#include "udos/scenegen.hpp"

namespace udos::testing {

/// 200 default scenes with seed 7.
SceneSpec toy_spec();
std::shared_ptr<const Dataset> toy_dataset();

/// Detector trained on toy_dataset() for 30 epochs. Trained once per build
/// tree and cached under UDOS_TEST_CACHE_DIR.
const DetectorWeights<double>& toy_detector();

}  // namespace udos::testing
