// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/error.hpp"

namespace agb {

void throw_invalid(const std::string& message) {
  throw Error(ErrorKind::invalid_argument, "E_INVALID_ARGUMENT", message);
}

void throw_data(const std::string& code, const std::string& message) {
  throw Error(ErrorKind::data, code, message);
}

void throw_config(const std::string& message) {
  throw Error(ErrorKind::config, "E_CONFIG", message);
}

void throw_numeric(const std::string& message) {
  throw Error(ErrorKind::numeric, "E_NUMERIC_FAULT", message);
}

int exit_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config:
      return 2;
    case ErrorKind::invalid_argument:
    case ErrorKind::data:
      return 3;
    case ErrorKind::numeric:
      return 4;
    case ErrorKind::internal:
      break;
  }
  return 1;
}

}  // namespace agb
