#pragma once

#include <iosfwd>

#include "svlq/kernel.hpp"
#include "svlq/volterra.hpp"

namespace svlq::detail {

// High-order pointwise resolvent (resolvent_point.cpp).
FactoredKernel point_resolvent(const ProblemData& problem, const DiscreteState& ds);

// Raw native-endian doubles for the cache files.
void write_doubles(std::ostream& out, const double* p, std::size_t n);
void read_doubles(std::istream& in, double* p, std::size_t n);

}  // namespace svlq::detail
