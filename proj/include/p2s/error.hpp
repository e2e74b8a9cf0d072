#ifndef P2S_ERROR_HPP
#define P2S_ERROR_HPP

#include <stdexcept>
#include <string>

namespace p2s {

// Every failure raised by the library carries a code so callers (and the
// CLI exit-status mapping) can react without parsing message text.
enum class ErrorCode {
  bad_dimensions,   // shape/size mismatch or non-positive extent
  non_finite,       // NaN or Inf where finite values are required
  empty_mask,       // mask selects no voxels
  index_out_of_bounds,
  too_few_volumes,  // denoising needs n >= 2
  bad_argument,     // invalid parameter value (negative lambda, bad radius, ...)
  bad_config,       // malformed phantom spec / configuration document
  numeric_failure,  // solver could not produce a usable result
  io_open,          // file cannot be opened / created
  io_truncated,     // file shorter than its header promises
  io_magic,         // magic bytes / format signature wrong
  io_unsupported,   // valid file, unsupported feature (dtype, dims, pair format)
  io_write,         // write or rename failed
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_dimensions: return "bad dimensions";
    case ErrorCode::non_finite: return "non-finite data";
    case ErrorCode::empty_mask: return "empty mask";
    case ErrorCode::index_out_of_bounds: return "index out of bounds";
    case ErrorCode::too_few_volumes: return "too few volumes";
    case ErrorCode::bad_argument: return "bad argument";
    case ErrorCode::bad_config: return "bad config";
    case ErrorCode::numeric_failure: return "numeric failure";
    case ErrorCode::io_open: return "cannot open";
    case ErrorCode::io_truncated: return "truncated file";
    case ErrorCode::io_magic: return "bad magic";
    case ErrorCode::io_unsupported: return "unsupported";
    case ErrorCode::io_write: return "write failed";
  }
  return "error";
}

}  // namespace p2s

#endif
