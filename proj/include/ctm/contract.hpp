#pragma once

#include "ctm/tensor.hpp"

namespace ctm {

// ncon convention: labels[i] has one entry per axis of tensors[i]. A positive
// label appears exactly twice in the whole network and is summed; a negative
// label appears once and becomes an output axis (-1 first, then -2, ...).
// Contraction order is greedy by minimal intermediate size unless `order`
// (a sequence of positive labels) is supplied.
DenseTensor contract(const std::vector<const DenseTensor*>& tensors,
                     const std::vector<std::vector<int>>& labels,
                     const std::vector<int>& order = {});
DenseTensor contract(const std::vector<DenseTensor>& tensors,
                     const std::vector<std::vector<int>>& labels,
                     const std::vector<int>& order = {});

// Serial reference: sums the network by nested loops over all summed labels.
// Exponential cost, kept for tests and the kernel benchmark.
DenseTensor contract_reference(const std::vector<const DenseTensor*>& tensors,
                               const std::vector<std::vector<int>>& labels);
DenseTensor contract_reference(const std::vector<DenseTensor>& tensors,
                               const std::vector<std::vector<int>>& labels);

// Network value where tensor i enters as conj(tensors[i]) when conj_flags[i].
DenseTensor contract_flagged(const std::vector<const DenseTensor*>& tensors,
                             const std::vector<std::vector<int>>& labels,
                             const std::vector<bool>& conj_flags,
                             const std::vector<int>& order = {});

// Cotangent of one slot of a (flagged) contraction under the convention
// dE = 2 Re tr(G_X dX^dagger): returns G for the raw tensors[slot], given the
// cotangent of the network output.
DenseTensor contract_vjp(const std::vector<const DenseTensor*>& tensors,
                         const std::vector<std::vector<int>>& labels,
                         const std::vector<bool>& conj_flags, size_t slot,
                         const DenseTensor& cotangent);

}  // namespace ctm
