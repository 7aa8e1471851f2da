// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <stdexcept>
#include <string>

namespace agb {

/// Broad failure classes; each maps onto one process exit status at the CLI.
enum class ErrorKind {
  invalid_argument,
  config,
  data,
  numeric,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Machine-readable identifier such as "E_EMPTY_SPLIT".
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

[[noreturn]] void throw_invalid(const std::string& message);
[[noreturn]] void throw_data(const std::string& code, const std::string& message);
[[noreturn]] void throw_config(const std::string& message);
[[noreturn]] void throw_numeric(const std::string& message);

int exit_status(ErrorKind kind) noexcept;

}  // namespace agb
