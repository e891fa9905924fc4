// kws/common.hpp

// Copyright 2026 the qbe-kws authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace kws {

// Base of all toolkit errors.  The two broad categories carry the process
// exit code used by the CLI: usage/config problems exit 1, data problems
// exit 2, anything else exits 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

#define KWS_DEFINE_ERROR(Name, Base) \
  class Name : public Base {         \
   public:                           \
    using Base::Base;                \
  }

// corpus
KWS_DEFINE_ERROR(UnsupportedFormat, DataError);
KWS_DEFINE_ERROR(CorruptHeader, DataError);
KWS_DEFINE_ERROR(InvalidSpec, UsageError);
// features
KWS_DEFINE_ERROR(TooShort, DataError);
KWS_DEFINE_ERROR(RateMismatch, DataError);
KWS_DEFINE_ERROR(IoError, DataError);
KWS_DEFINE_ERROR(BadMagic, DataError);
KWS_DEFINE_ERROR(DimMismatch, DataError);
// sae
KWS_DEFINE_ERROR(InvalidConfig, UsageError);
KWS_DEFINE_ERROR(EmptyInput, DataError);
// dtw
KWS_DEFINE_ERROR(EmptyExemplarList, DataError);
KWS_DEFINE_ERROR(MixedFeatureKinds, DataError);
KWS_DEFINE_ERROR(OutOfRange, DataError);
// nn
KWS_DEFINE_ERROR(ShapeMismatch, DataError);
KWS_DEFINE_ERROR(StaleCache, DataError);
// spotter
KWS_DEFINE_ERROR(InsufficientData, DataError);
KWS_DEFINE_ERROR(MissingTargets, DataError);
// eval
KWS_DEFINE_ERROR(DegenerateLabels, DataError);
KWS_DEFINE_ERROR(MissingGroundTruth, DataError);
// cli
KWS_DEFINE_ERROR(ConfigError, UsageError);
KWS_DEFINE_ERROR(MissingInput, DataError);

#undef KWS_DEFINE_ERROR

}  // namespace kws
