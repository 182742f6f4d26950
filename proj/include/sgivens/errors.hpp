#pragma once

#include <stdexcept>

namespace sgivens {

/// An operation was invoked on an object in the wrong state (e.g. a cursor mismatch).
class state_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace sgivens
