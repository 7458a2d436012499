#include "ctm/c4v.hpp"

#include <algorithm>
#include <map>

namespace ctm {

const std::vector<std::array<long, 4>>& c4v_elements() {
  static const std::vector<std::array<long, 4>> elements = [] {
    // generators: 90-degree rotation (t,r,b,l)->(l,t,r,b) and the reflection
    // (t,r,b,l)->(t,l,b,r); close under composition
    const std::array<long, 4> rot{3, 0, 1, 2};
    const std::array<long, 4> refl{0, 3, 2, 1};
    auto compose = [](const std::array<long, 4>& f, const std::array<long, 4>& g) {
      std::array<long, 4> h{};
      for (long i = 0; i < 4; ++i) h[static_cast<size_t>(i)] = g[static_cast<size_t>(f[static_cast<size_t>(i)])];
      return h;
    };
    std::vector<std::array<long, 4>> out{{0, 1, 2, 3}};
    bool grew = true;
    while (grew) {
      grew = false;
      std::vector<std::array<long, 4>> more;
      for (const auto& e : out)
        for (const auto& g : {rot, refl}) {
          auto h = compose(e, g);
          if (std::find(out.begin(), out.end(), h) == out.end() &&
              std::find(more.begin(), more.end(), h) == more.end()) {
            more.push_back(h);
            grew = true;
          }
        }
      out.insert(out.end(), more.begin(), more.end());
    }
    std::sort(out.begin(), out.end());
    return out;
  }();
  return elements;
}

DenseTensor c4v_apply(const DenseTensor& a, const std::array<long, 4>& perm) {
  if (a.rank() != 5) throw ShapeError("c4v_apply expects a rank-5 site tensor");
  std::vector<long> axes{0, 1 + perm[0], 1 + perm[1], 1 + perm[2], 1 + perm[3]};
  return a.permuted(axes);
}

DenseTensor c4v_symmetrize(const DenseTensor& a) {
  if (a.rank() != 5) throw ShapeError("c4v_symmetrize expects a rank-5 site tensor");
  for (long ax = 2; ax <= 4; ++ax)
    if (a.dim(ax) != a.dim(1)) throw ShapeError("c4v_symmetrize: virtual dimensions differ");
  DenseTensor acc(a.shape());
  for (const auto& g : c4v_elements()) acc += c4v_apply(a, g);
  acc *= cdouble(1.0 / static_cast<double>(c4v_elements().size()), 0.0);
  return acc;
}

double c4v_asymmetry(const DenseTensor& a) {
  double worst = 0.0;
  for (const auto& g : c4v_elements()) worst = std::max(worst, max_abs_diff(a, c4v_apply(a, g)));
  return worst;
}

std::vector<std::vector<long>> c4v_orbits(long d, long bond) {
  const long dims[5] = {d, bond, bond, bond, bond};
  auto linear = [&](const std::array<long, 5>& idx) {
    long lin = 0;
    for (long ax = 0; ax < 5; ++ax) lin = lin * dims[ax] + idx[static_cast<size_t>(ax)];
    return lin;
  };
  std::map<long, std::vector<long>> groups;  // canonical representative -> orbit
  std::array<long, 5> idx{};
  const long total = d * bond * bond * bond * bond;
  for (long lin = 0; lin < total; ++lin) {
    long rem = lin;
    for (long ax = 4; ax >= 0; --ax) {
      idx[static_cast<size_t>(ax)] = rem % dims[ax];
      rem /= dims[ax];
    }
    long canon = total;
    for (const auto& g : c4v_elements()) {
      std::array<long, 5> im{idx[0], idx[1 + static_cast<size_t>(g[0])], idx[1 + static_cast<size_t>(g[1])],
                             idx[1 + static_cast<size_t>(g[2])], idx[1 + static_cast<size_t>(g[3])]};
      canon = std::min(canon, linear(im));
    }
    groups[canon].push_back(lin);
  }
  std::vector<std::vector<long>> out;
  out.reserve(groups.size());
  for (auto& [rep, members] : groups) {
    (void)rep;
    out.push_back(std::move(members));
  }
  return out;
}

}  // namespace ctm
