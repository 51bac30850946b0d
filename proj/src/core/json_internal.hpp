// Copyright 2026 The Risk Advisor Authors.
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

// JSON document helpers shared by the core translation units. Not installed.

#ifndef RISKADVISOR_SRC_JSON_INTERNAL_HPP_
#define RISKADVISOR_SRC_JSON_INTERNAL_HPP_

#include "json.hpp"
#include "riskadvisor/sgbt.hpp"

namespace riskadvisor::sgbt {

nlohmann::json ParamsToJson(const SgbtParams& p);
SgbtParams ParamsFromJson(const nlohmann::json& j);
nlohmann::json ModelToJson(const SgbtModel& m);
SgbtModel ModelFromJson(const nlohmann::json& j);

}  // namespace riskadvisor::sgbt

#endif  // RISKADVISOR_SRC_JSON_INTERNAL_HPP_
