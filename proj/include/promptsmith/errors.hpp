// Copyright 2026 The Promptsmith Authors.
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

#include <stdexcept>
#include <string>

namespace promptsmith {

// Base of every domain error. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller violated an operation's precondition (empty input, bad shape).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Unknown token id or a word missing from a closed vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

// Arguments are well-formed but break a documented contract
// (dimension mismatch, zero vector, attribute absent from a prompt).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// The selected gateway or backend cannot perform the request.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// No window of the caption can hold the source attribute.
class NoMatchError : public Error {
 public:
  using Error::Error;
};

// Failure inside an external model adapter.
class GatewayError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace promptsmith
