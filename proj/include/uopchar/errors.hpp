// Copyright 2026 The uopchar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace uopchar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document (JSON/XML syntax or schema shape).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed document that violates a semantic invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Measurements that contradict each other (e.g. negative uop remainder).
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

// A functional-unit port combination for which no blocking instruction exists.
class UncoverableCombinationError : public Error {
 public:
  using Error::Error;
};

class UnknownInstructionError : public Error {
 public:
  using Error::Error;
};

}  // namespace uopchar
