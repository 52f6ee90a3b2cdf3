#pragma once

#include <cstdint>

#include "reflectix/typerep.hpp"

namespace reflectix {

// The declaration of a synonym is the proof that it equals its target.
EqualityWitness synonym_witness(const Type& synonym, const Type& target);

// Incremented by every descriptor registration; caches derived from
// view_desc compare it to detect staleness.
std::uint64_t desc_generation();

}  // namespace reflectix

namespace reflectix {
// Types whose values the children functions search for nested occurrences of
// the parent type: variants, records, tuples, synonyms and non-byte arrays.
bool searched_type(const Type& t);
}
