// Copyright 2026 The rankforge Authors
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
#include <string_view>

namespace rankforge {

enum class errc {
  index_out_of_range,
  non_finite,
  length_mismatch,
  degenerate_vector,
  constant_input,
  empty_scores,
  alpha_out_of_range,
  k_too_large,
  missing_query_vector,
  invalid_params,
  malformed_block,
  size_mismatch,
  parse_error,
  duplicate_candidate,
  empty_system,
  not_normalized,
  zero_entry,
  method_unavailable,
  invalid_config,
};

constexpr std::string_view to_string(errc code) noexcept {
  switch (code) {
    case errc::index_out_of_range: return "IndexOutOfRange";
    case errc::non_finite: return "NonFinite";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::degenerate_vector: return "DegenerateVector";
    case errc::constant_input: return "ConstantInput";
    case errc::empty_scores: return "EmptyScores";
    case errc::alpha_out_of_range: return "AlphaOutOfRange";
    case errc::k_too_large: return "KTooLarge";
    case errc::missing_query_vector: return "MissingQueryVector";
    case errc::invalid_params: return "InvalidParams";
    case errc::malformed_block: return "MalformedBlock";
    case errc::size_mismatch: return "SizeMismatch";
    case errc::parse_error: return "ParseError";
    case errc::duplicate_candidate: return "DuplicateCandidate";
    case errc::empty_system: return "EmptySystem";
    case errc::not_normalized: return "NotNormalized";
    case errc::zero_entry: return "ZeroEntry";
    case errc::method_unavailable: return "MethodUnavailable";
    case errc::invalid_config: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every validation failure in the library is reported through this type.
/// `code()` is stable; the message carries context (indices, line numbers).
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

}  // namespace rankforge
