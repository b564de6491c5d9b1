// Copyright 2026 The PrefAlign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prefalign/error.h"

namespace prefalign {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kPromptMismatch:
      return "PromptMismatch";
    case ErrorCode::kDomainError:
      return "DomainError";
    case ErrorCode::kNoConvergence:
      return "NoConvergence";
    case ErrorCode::kUnboundedRatio:
      return "UnboundedRatio";
    case ErrorCode::kEmptyClass:
      return "EmptyClass";
    case ErrorCode::kConfigError:
      return "ConfigError";
    case ErrorCode::kDegenerateFit:
      return "DegenerateFit";
    case ErrorCode::kEmptyData:
      return "EmptyData";
    case ErrorCode::kIoError:
      return "IoError";
  }
  return "Unknown";
}

}  // namespace prefalign
