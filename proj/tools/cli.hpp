#ifndef PERMUAP_TOOLS_CLI_HPP_
#define PERMUAP_TOOLS_CLI_HPP_

#include <iosfwd>

namespace permuap::cli {

enum ExitCode : int {
  kOk              = 0,
  kFailure         = 1,  // ran, but missed the requested accuracy
  kValidation      = 2,
  kWidthCap        = 3,
  kRetryExhausted  = 4,
};

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace permuap::cli

#endif  // PERMUAP_TOOLS_CLI_HPP_
