#pragma once

#include "olab/geometry.hpp"
#include "olab/graph.hpp"
#include "olab/tangent.hpp"

#include <string>
#include <vector>

namespace olab {

// t = 4·Σ_{k≥0} 5^(−2^k)
double constant_t();
// u = 4 − 4·Σ_{k≥1} 5^(−2^k)
double constant_u();
// a = Σ_{k≥1} 2^(−2^k)
double constant_a();

std::vector<std::string> builtin_names();
IfsSystem builtin(const std::string& name);

std::vector<std::string> gd_builtin_names();
GdSystem gd_builtin(const std::string& name);

// Lacunary comb directions for builtins that carry them (s = 1 or 2).
std::vector<CombDirection> builtin_comb_directions(const std::string& name, int s);

}  // namespace olab
