#ifndef DPGRR_ERROR_HPP
#define DPGRR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dpgrr {

// Base for every failure raised by the library. Callers that only care
// whether something went wrong catch this; tests match the derived types.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DPGRR_DEFINE_ERROR(Name)                 \
  class Name : public error {                    \
   public:                                       \
    using error::error;                          \
  };

DPGRR_DEFINE_ERROR(empty_graph)
DPGRR_DEFINE_ERROR(eta_violation)
DPGRR_DEFINE_ERROR(invalid_argument)
DPGRR_DEFINE_ERROR(non_positive_step)
DPGRR_DEFINE_ERROR(dimension_mismatch)
DPGRR_DEFINE_ERROR(empty_data)
DPGRR_DEFINE_ERROR(bad_k)
DPGRR_DEFINE_ERROR(non_finite_iterate)
DPGRR_DEFINE_ERROR(missing_inner_trace)
DPGRR_DEFINE_ERROR(too_few_samples)
DPGRR_DEFINE_ERROR(label_error)
DPGRR_DEFINE_ERROR(config_error)

#undef DPGRR_DEFINE_ERROR

class parse_error : public error {
 public:
  parse_error(std::size_t line, const std::string& what)
      : error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace dpgrr

#endif  // DPGRR_ERROR_HPP
