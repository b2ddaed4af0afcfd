// SPDX-License-Identifier: Apache-2.0
#include "siblingshift/error.hpp"

namespace siblingshift {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::dimension_mismatch: return "dimension mismatch";
    case ErrorKind::duplicate_word: return "duplicate word";
    case ErrorKind::unknown_word: return "unknown word";
    case ErrorKind::io: return "i/o failure";
    case ErrorKind::checksum_mismatch: return "checksum mismatch";
    case ErrorKind::truncated: return "truncated payload";
    case ErrorKind::non_finite: return "non-finite value";
    case ErrorKind::degenerate_count: return "degenerate count";
    case ErrorKind::not_invertible: return "covariance not invertible";
    case ErrorKind::incompatible_config: return "incompatible configuration";
    case ErrorKind::empty_input: return "empty input";
    case ErrorKind::constant_input: return "constant input";
  }
  return "unknown error";
}

}  // namespace siblingshift
