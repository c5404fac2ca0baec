#pragma once

#include <stdexcept>
#include <string>

namespace embrec {

// Base for every data or contract failure raised by the library. The CLI maps
// these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define EMBREC_DEFINE_ERROR(Name) \
  class Name : public Error {     \
   public:                        \
    using Error::Error;           \
  }

EMBREC_DEFINE_ERROR(DimensionError);
EMBREC_DEFINE_ERROR(DegenerateInputError);
EMBREC_DEFINE_ERROR(ContractError);
EMBREC_DEFINE_ERROR(FormatError);
EMBREC_DEFINE_ERROR(ParseError);
EMBREC_DEFINE_ERROR(UnsupportedFormatError);
EMBREC_DEFINE_ERROR(InsufficientAudioError);
EMBREC_DEFINE_ERROR(VocabularyError);
EMBREC_DEFINE_ERROR(IngestionError);
EMBREC_DEFINE_ERROR(UndefinedMetricError);
EMBREC_DEFINE_ERROR(BuildError);

#undef EMBREC_DEFINE_ERROR

}  // namespace embrec
