// Copyright 2026 The SnailTrail Authors.
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

#ifndef SNAILTRAIL_SRC_ERROR_H_
#define SNAILTRAIL_SRC_ERROR_H_

#include <stdexcept>
#include <string>

namespace snailtrail {

// Error categories. The numeric values are mirrored by st_status in the C API.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kInvalidConfig = 2,
  kIo = 3,
  kMalformedFrame = 4,
  kMalformedTrace = 5,
  kSetupConflict = 6,
  kUnknownOperator = 7,
  kAmbiguousMatch = 8,
  kNetwork = 9,
  kInternal = 10,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace snailtrail

#endif  // SNAILTRAIL_SRC_ERROR_H_
