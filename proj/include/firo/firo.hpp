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

#ifndef FIRO_FIRO_HPP
#define FIRO_FIRO_HPP

#include "firo/attack.hpp"
#include "firo/cluster_index.hpp"
#include "firo/error.hpp"
#include "firo/metrics.hpp"
#include "firo/model.hpp"
#include "firo/noise.hpp"
#include "firo/text.hpp"
#include "firo/toybench.hpp"
#include "firo/trainer.hpp"
#include "firo/victim.hpp"

#endif  // FIRO_FIRO_HPP
