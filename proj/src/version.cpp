#include "spellattack/version.hpp"

namespace spellattack {

const char* version() { return SPELLATTACK_VERSION; }

}  // namespace spellattack
