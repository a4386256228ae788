/*
 * Copyright 2026 The MACQ Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace macq {

// Every failure raised by the library derives from Error. The category maps
// onto the CLI exit-code contract (see tools/macq_cli.cpp).
enum class ErrorCategory {
  kUsage = 2,     // argument, shape, schema and parse problems
  kTraining = 3,  // fitting diverged
  kAnalysis = 4,  // smoothing / numeric failures during analysis
  kIo = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define MACQ_DEFINE_ERROR(Name, Category)                         \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& what) : Error(Category, what) {} \
  };

MACQ_DEFINE_ERROR(ArgumentError, ErrorCategory::kUsage)
MACQ_DEFINE_ERROR(ShapeError, ErrorCategory::kUsage)
MACQ_DEFINE_ERROR(DomainError, ErrorCategory::kUsage)
MACQ_DEFINE_ERROR(SchemaError, ErrorCategory::kUsage)
MACQ_DEFINE_ERROR(ParseError, ErrorCategory::kUsage)
MACQ_DEFINE_ERROR(ValidationError, ErrorCategory::kUsage)
MACQ_DEFINE_ERROR(PreprocessingError, ErrorCategory::kUsage)
MACQ_DEFINE_ERROR(TrainingError, ErrorCategory::kTraining)
MACQ_DEFINE_ERROR(SmoothingError, ErrorCategory::kAnalysis)
MACQ_DEFINE_ERROR(NumericError, ErrorCategory::kAnalysis)
MACQ_DEFINE_ERROR(IoError, ErrorCategory::kIo)

#undef MACQ_DEFINE_ERROR

}  // namespace macq
