#include "rel/errors.hpp"

namespace rel {

void require(bool cond, const std::string& what) {
  if (!cond) throw PreconditionError(what);
}

}  // namespace rel
