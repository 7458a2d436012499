#include "ctm/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ctm {

void write_tnt1(const std::string& path, const DenseTensor& t) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_tnt1: cannot open " + path);
  std::fprintf(f, "TNT1\n%ld\n", t.rank());
  for (long i = 0; i < t.rank(); ++i)
    std::fprintf(f, "%ld%c", t.dim(i), i + 1 == t.rank() ? '\n' : ' ');
  if (t.rank() == 0) std::fprintf(f, "\n");
  for (long i = 0; i < t.size(); ++i)
    std::fprintf(f, "%.17g %.17g\n", t[i].real(), t[i].imag());
  std::fclose(f);
}

DenseTensor read_tnt1(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_tnt1: cannot open " + path);
  std::string magic;
  std::getline(in, magic);
  if (magic != "TNT1") throw std::runtime_error("read_tnt1: bad magic in " + path);
  long rank = -1;
  in >> rank;
  if (rank < 0) throw std::runtime_error("read_tnt1: bad rank in " + path);
  std::vector<long> shape(static_cast<size_t>(rank));
  for (auto& d : shape) in >> d;
  DenseTensor t(shape);
  for (long i = 0; i < t.size(); ++i) {
    double re = 0.0, im = 0.0;
    in >> re >> im;
    if (!in) throw std::runtime_error("read_tnt1: truncated data in " + path);
    t[i] = cdouble(re, im);
  }
  return t;
}

}  // namespace ctm
