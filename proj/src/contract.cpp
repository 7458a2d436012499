#include "ctm/contract.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ctm/kernels.hpp"

namespace ctm {

namespace {

struct Node {
  DenseTensor tensor;
  std::vector<int> labels;
};

void validate(const std::vector<const DenseTensor*>& tensors,
              const std::vector<std::vector<int>>& labels) {
  if (tensors.size() != labels.size()) throw ShapeError("contract: tensors/labels size mismatch");
  std::map<int, std::vector<long>> dims;  // label -> list of dims seen
  for (size_t i = 0; i < tensors.size(); ++i) {
    if (static_cast<long>(labels[i].size()) != tensors[i]->rank())
      throw ShapeError("contract: label count differs from tensor rank at slot " +
                       std::to_string(i));
    for (size_t ax = 0; ax < labels[i].size(); ++ax) {
      int l = labels[i][ax];
      if (l == 0) throw ShapeError("contract: label 0 is not allowed");
      dims[l].push_back(tensors[i]->dim(static_cast<long>(ax)));
    }
  }
  for (const auto& [l, ds] : dims) {
    if (l > 0) {
      if (ds.size() != 2)
        throw ShapeError("contract: summed label " + std::to_string(l) + " appears " +
                         std::to_string(ds.size()) + " times");
      if (ds[0] != ds[1])
        throw ShapeError("contract: dimension mismatch on label " + std::to_string(l) + " (" +
                         std::to_string(ds[0]) + " vs " + std::to_string(ds[1]) + ")");
    } else if (ds.size() != 1) {
      throw ShapeError("contract: open label " + std::to_string(l) + " appears more than once");
    }
  }
}

// Sum pairs of axes carrying the same label within one node.
void self_trace(Node& n) {
  for (;;) {
    int lab = 0;
    long p = -1, q = -1;
    for (size_t a = 0; a < n.labels.size() && p < 0; ++a)
      for (size_t b = a + 1; b < n.labels.size(); ++b)
        if (n.labels[a] == n.labels[b]) {
          lab = n.labels[a];
          p = static_cast<long>(a);
          q = static_cast<long>(b);
          break;
        }
    if (p < 0) return;
    (void)lab;
    std::vector<long> axes;
    for (long a = 0; a < n.tensor.rank(); ++a)
      if (a != p && a != q) axes.push_back(a);
    axes.push_back(p);
    axes.push_back(q);
    DenseTensor perm = n.tensor.permuted(axes);
    long d = perm.dim(perm.rank() - 1);
    long rest = perm.size() / (d * d);
    DenseTensor out(std::vector<long>(perm.shape().begin(), perm.shape().end() - 2));
    for (long r = 0; r < rest; ++r) {
      cdouble s = 0.0;
      for (long i = 0; i < d; ++i) s += perm[r * d * d + i * d + i];
      out[r] = s;
    }
    std::vector<int> newlabels;
    for (long a = 0; a < static_cast<long>(n.labels.size()); ++a)
      if (a != p && a != q) newlabels.push_back(n.labels[static_cast<size_t>(a)]);
    n.tensor = std::move(out);
    n.labels = std::move(newlabels);
  }
}

Node contract_pair(const Node& a, const Node& b) {
  std::vector<int> shared;
  for (int l : a.labels)
    if (l > 0 && std::find(b.labels.begin(), b.labels.end(), l) != b.labels.end())
      shared.push_back(l);
  std::sort(shared.begin(), shared.end());
  shared.erase(std::unique(shared.begin(), shared.end()), shared.end());

  auto split = [&](const Node& n, bool shared_first) {
    std::vector<long> free_axes, shared_axes;
    for (long ax = 0; ax < static_cast<long>(n.labels.size()); ++ax) {
      if (std::find(shared.begin(), shared.end(), n.labels[static_cast<size_t>(ax)]) !=
          shared.end())
        shared_axes.push_back(ax);
      else
        free_axes.push_back(ax);
    }
    // order shared axes by label value so both sides agree
    std::sort(shared_axes.begin(), shared_axes.end(), [&](long x, long y) {
      return n.labels[static_cast<size_t>(x)] < n.labels[static_cast<size_t>(y)];
    });
    std::vector<long> perm;
    if (shared_first) {
      perm = shared_axes;
      perm.insert(perm.end(), free_axes.begin(), free_axes.end());
    } else {
      perm = free_axes;
      perm.insert(perm.end(), shared_axes.begin(), shared_axes.end());
    }
    return std::pair<std::vector<long>, std::vector<long>>(perm, free_axes);
  };

  auto [perm_a, free_a] = split(a, false);
  auto [perm_b, free_b] = split(b, true);
  DenseTensor ta = a.tensor.permuted(perm_a);
  DenseTensor tb = b.tensor.permuted(perm_b);
  long s = 1;
  for (int l : shared) {
    for (size_t ax = 0; ax < a.labels.size(); ++ax)
      if (a.labels[ax] == l) s *= a.tensor.dim(static_cast<long>(ax));
  }
  long fa = ta.size() / s, fb = tb.size() / s;
  DenseTensor c(std::vector<long>{std::max<long>(fa, 1), std::max<long>(fb, 1)});
  kernels::gemm(ta.data(), tb.data(), c.data(), fa, s, fb);

  Node out;
  std::vector<long> out_shape;
  std::vector<int> out_labels;
  for (long ax : free_a) {
    out_shape.push_back(a.tensor.dim(ax));
    out_labels.push_back(a.labels[static_cast<size_t>(ax)]);
  }
  for (long ax : free_b) {
    out_shape.push_back(b.tensor.dim(ax));
    out_labels.push_back(b.labels[static_cast<size_t>(ax)]);
  }
  out.tensor = c.reshaped(out_shape);
  out.labels = std::move(out_labels);
  self_trace(out);
  return out;
}

DenseTensor finalize(Node n) {
  // order open axes as -1, -2, ...
  std::vector<long> axes(n.labels.size());
  std::iota(axes.begin(), axes.end(), 0);
  std::sort(axes.begin(), axes.end(), [&](long x, long y) {
    return n.labels[static_cast<size_t>(x)] > n.labels[static_cast<size_t>(y)];
  });
  return n.tensor.permuted(axes);
}

}  // namespace

DenseTensor contract(const std::vector<const DenseTensor*>& tensors,
                     const std::vector<std::vector<int>>& labels, const std::vector<int>& order) {
  validate(tensors, labels);
  std::vector<Node> nodes;
  nodes.reserve(tensors.size());
  for (size_t i = 0; i < tensors.size(); ++i) {
    nodes.push_back(Node{*tensors[i], labels[i]});
    self_trace(nodes.back());
  }
  if (nodes.empty()) throw ShapeError("contract: empty network");

  size_t order_pos = 0;
  while (nodes.size() > 1) {
    size_t pi = 0, pj = 0;
    bool found = false;
    if (!order.empty() && order_pos < order.size()) {
      while (order_pos < order.size() && !found) {
        int l = order[order_pos];
        std::vector<size_t> holders;
        for (size_t i = 0; i < nodes.size(); ++i)
          if (std::find(nodes[i].labels.begin(), nodes[i].labels.end(), l) != nodes[i].labels.end())
            holders.push_back(i);
        if (holders.size() == 2) {
          pi = holders[0];
          pj = holders[1];
          found = true;
        } else {
          ++order_pos;  // label already consumed by an earlier merge
        }
      }
    }
    if (!found) {
      // greedy: smallest intermediate among connected pairs
      long best = -1;
      for (size_t i = 0; i < nodes.size(); ++i)
        for (size_t j = i + 1; j < nodes.size(); ++j) {
          long s = 1;
          bool connected = false;
          for (size_t ax = 0; ax < nodes[i].labels.size(); ++ax) {
            int l = nodes[i].labels[ax];
            if (l > 0 && std::find(nodes[j].labels.begin(), nodes[j].labels.end(), l) !=
                             nodes[j].labels.end()) {
              connected = true;
              s *= nodes[i].tensor.dim(static_cast<long>(ax));
            }
          }
          if (!connected) continue;
          long res = (nodes[i].tensor.size() / s) * (nodes[j].tensor.size() / s);
          if (best < 0 || res < best) {
            best = res;
            pi = i;
            pj = j;
            found = true;
          }
        }
      if (!found) {  // disconnected network: outer product of two smallest
        std::vector<size_t> idx(nodes.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(),
                  [&](size_t x, size_t y) { return nodes[x].tensor.size() < nodes[y].tensor.size(); });
        pi = std::min(idx[0], idx[1]);
        pj = std::max(idx[0], idx[1]);
      }
    }
    Node merged = contract_pair(nodes[pi], nodes[pj]);
    nodes.erase(nodes.begin() + static_cast<long>(pj));
    nodes.erase(nodes.begin() + static_cast<long>(pi));
    nodes.push_back(std::move(merged));
  }
  return finalize(std::move(nodes.front()));
}

DenseTensor contract(const std::vector<DenseTensor>& tensors,
                     const std::vector<std::vector<int>>& labels, const std::vector<int>& order) {
  std::vector<const DenseTensor*> ptrs;
  ptrs.reserve(tensors.size());
  for (const auto& t : tensors) ptrs.push_back(&t);
  return contract(ptrs, labels, order);
}

DenseTensor contract_reference(const std::vector<const DenseTensor*>& tensors,
                               const std::vector<std::vector<int>>& labels) {
  validate(tensors, labels);
  std::map<int, long> dim_of;
  for (size_t i = 0; i < tensors.size(); ++i)
    for (size_t ax = 0; ax < labels[i].size(); ++ax) dim_of[labels[i][ax]] = tensors[i]->dim(static_cast<long>(ax));

  std::vector<int> open, summed;
  for (const auto& [l, d] : dim_of) {
    (void)d;
    if (l < 0) open.push_back(l);
    else summed.push_back(l);
  }
  std::sort(open.begin(), open.end(), std::greater<int>());  // -1, -2, ...

  std::vector<long> out_shape;
  for (int l : open) out_shape.push_back(dim_of[l]);
  DenseTensor out(out_shape);

  std::map<int, long> value;
  auto entry = [&](size_t i) {
    long lin = 0;
    for (size_t ax = 0; ax < labels[i].size(); ++ax)
      lin = lin * tensors[i]->dim(static_cast<long>(ax)) + value[labels[i][ax]];
    return (*tensors[i])[lin];
  };

  long nout = out.size();
  for (long o = 0; o < nout; ++o) {
    long rem = o;
    for (long k = static_cast<long>(open.size()) - 1; k >= 0; --k) {
      value[open[static_cast<size_t>(k)]] = rem % dim_of[open[static_cast<size_t>(k)]];
      rem /= dim_of[open[static_cast<size_t>(k)]];
    }
    for (int l : summed) value[l] = 0;
    cdouble acc = 0.0;
    for (;;) {
      cdouble prod = 1.0;
      for (size_t i = 0; i < tensors.size(); ++i) prod *= entry(i);
      acc += prod;
      long k = static_cast<long>(summed.size()) - 1;
      for (; k >= 0; --k) {
        int l = summed[static_cast<size_t>(k)];
        if (++value[l] < dim_of[l]) break;
        value[l] = 0;
      }
      if (k < 0) break;
    }
    out[o] = acc;
  }
  return out;
}

DenseTensor contract_reference(const std::vector<DenseTensor>& tensors,
                               const std::vector<std::vector<int>>& labels) {
  std::vector<const DenseTensor*> ptrs;
  for (const auto& t : tensors) ptrs.push_back(&t);
  return contract_reference(ptrs, labels);
}

DenseTensor contract_flagged(const std::vector<const DenseTensor*>& tensors,
                             const std::vector<std::vector<int>>& labels,
                             const std::vector<bool>& conj_flags, const std::vector<int>& order) {
  std::vector<DenseTensor> vals;
  vals.reserve(tensors.size());
  for (size_t i = 0; i < tensors.size(); ++i)
    vals.push_back(conj_flags[i] ? tensors[i]->conjugate() : *tensors[i]);
  return contract(vals, labels, order);
}

DenseTensor contract_vjp(const std::vector<const DenseTensor*>& tensors,
                         const std::vector<std::vector<int>>& labels,
                         const std::vector<bool>& conj_flags, size_t slot,
                         const DenseTensor& cotangent) {
  validate(tensors, labels);
  int fresh = 0;
  for (const auto& ls : labels)
    for (int l : ls) fresh = std::max(fresh, std::abs(l));

  // open labels of the forward network, in output-axis order (-1, -2, ...)
  std::vector<int> open;
  for (const auto& ls : labels)
    for (int l : ls)
      if (l < 0) open.push_back(l);
  std::sort(open.begin(), open.end(), std::greater<int>());

  std::vector<DenseTensor> vjp_tensors;
  std::vector<std::vector<int>> vjp_labels;

  // other tensors enter conjugated relative to how they appear in the forward
  std::vector<size_t> node_of_slot(tensors.size(), 0);
  for (size_t j = 0; j < tensors.size(); ++j) {
    if (j == slot) continue;
    node_of_slot[j] = vjp_tensors.size();
    vjp_tensors.push_back(conj_flags[j] ? *tensors[j] : tensors[j]->conjugate());
    vjp_labels.push_back(labels[j]);
  }
  const size_t gnode = vjp_tensors.size();
  vjp_tensors.push_back(cotangent);
  vjp_labels.push_back(open);  // axis k of G carries open[k]

  const auto& slot_labels = labels[slot];
  auto slot_has = [&](int l) {
    return std::find(slot_labels.begin(), slot_labels.end(), l) != slot_labels.end();
  };

  // 1. forward-open labels not on the slot link their carrier with G: make
  //    them fresh positive labels so they cannot collide with new outputs
  for (size_t k = 0; k < open.size(); ++k) {
    if (slot_has(open[k])) continue;
    ++fresh;
    for (size_t n = 0; n < gnode; ++n)
      for (auto& l : vjp_labels[n])
        if (l == open[k]) l = fresh;
    vjp_labels[gnode][k] = fresh;
  }

  // 2. slot axes become the output axes -(ax+1) of the vjp network
  for (size_t ax = 0; ax < slot_labels.size(); ++ax) {
    int l = slot_labels[ax];
    int out_label = -static_cast<int>(ax) - 1;
    if (l < 0) {
      // open axis of the forward output: the matching G axis becomes open here
      for (size_t k = 0; k < open.size(); ++k)
        if (open[k] == l) vjp_labels[gnode][k] = out_label;
      continue;
    }
    size_t first_ax = static_cast<size_t>(
        std::find(slot_labels.begin(), slot_labels.end(), l) - slot_labels.begin());
    bool on_self = false;
    for (size_t bx = 0; bx < slot_labels.size(); ++bx)
      if (bx != ax && slot_labels[bx] == l) on_self = true;
    if (on_self) {
      if (ax == first_ax) continue;  // emit the identity node at the second copy
      long d = tensors[slot]->dim(static_cast<long>(ax));
      vjp_tensors.push_back(identity_matrix(d));
      vjp_labels.push_back({-static_cast<int>(first_ax) - 1, out_label});
      continue;
    }
    // rename the partner's (unique) occurrence to the output label
    for (size_t j = 0; j < tensors.size(); ++j) {
      if (j == slot) continue;
      for (auto& pl : vjp_labels[node_of_slot[j]])
        if (pl == l) pl = out_label;
    }
  }

  DenseTensor g = contract(vjp_tensors, vjp_labels);
  if (conj_flags[slot]) g = g.conjugate();
  return g;
}

}  // namespace ctm
