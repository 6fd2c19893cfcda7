#include "sortpress/rng.hpp"

#include <sstream>

namespace sortpress {

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

}  // namespace sortpress
