#ifndef VID_ERRORS_HPP
#define VID_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vid {

// Error categories map 1:1 onto process exit codes and C-API status codes.
enum class ErrorCode : int {
  Ok = 0,
  Usage = 1,     // bad parameters, bad flags, contract violations by the caller
  Data = 2,      // malformed corpora, checkpoint mismatches, schema errors
  Internal = 3,  // everything else
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(ErrorCode::Usage, msg) {}
};

struct ParamError : Error {
  explicit ParamError(const std::string& msg) : Error(ErrorCode::Usage, msg) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(ErrorCode::Internal, msg) {}
};

struct ContractError : Error {
  explicit ContractError(const std::string& msg) : Error(ErrorCode::Usage, msg) {}
};

struct DataError : Error {
  explicit DataError(const std::string& msg) : Error(ErrorCode::Data, msg) {}
};

// A document with no token from the drug lexicon. Corpus loading drops such
// documents; calling tokenize directly surfaces this error.
struct NoDrugMention : DataError {
  explicit NoDrugMention(const std::string& msg) : DataError(msg) {}
};

}  // namespace vid

#endif
