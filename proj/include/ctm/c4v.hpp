#pragma once

#include <array>

#include "ctm/tensor.hpp"

namespace ctm {

// The 8 symmetry elements of the square acting on the virtual legs
// (t, r, b, l); each entry maps output slot -> source slot.
const std::vector<std::array<long, 4>>& c4v_elements();

/// Applies one group element to a rank-5 site tensor (i; t, r, b, l).
DenseTensor c4v_apply(const DenseTensor& a, const std::array<long, 4>& perm);

/// Group-average projection onto the C4V-invariant subspace.
DenseTensor c4v_symmetrize(const DenseTensor& a);

/// Largest deviation max_g ||A - g(A)||_inf over the group.
double c4v_asymmetry(const DenseTensor& a);

/// Orbits of entry positions (linear indices into the (d, D, D, D, D) tensor)
/// under the group; the independent real parameters of a symmetric tensor.
std::vector<std::vector<long>> c4v_orbits(long d, long bond);

}  // namespace ctm
