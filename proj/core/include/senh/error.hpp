#ifndef SENH_ERROR_HPP
#define SENH_ERROR_HPP

#include <stdexcept>
#include <string>

namespace senh {

// Failure categories surfaced by the CLI as "error:<category>: <detail>".
enum class ErrorCategory {
  usage,    // bad command line
  config,   // bad or inconsistent configuration
  io,       // file system / OS failures
  format,   // malformed file contents (WAV, manifest, checkpoint)
  data,     // semantically invalid data (empty corpus, mismatched pair)
  shape,    // tensor shape / channel mismatches
  model,    // invalid model construction or checkpoint mismatch
  train,    // training-time failures (divergence)
  internal, // should-not-happen
};

const char* to_string(ErrorCategory c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

  // One-line machine-parsable form: "error:<category>: <message>"
  std::string line() const {
    return std::string("error:") + to_string(category_) + ": " + what();
  }

 private:
  ErrorCategory category_;
};

}  // namespace senh

#endif  // SENH_ERROR_HPP
