#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mgms {

class GridHierarchy;

/// Cellwise permeability on an n x n mesh, row-major.
struct PermeabilityField {
    int n = 0;
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::string spec_hash;
};

/// Throws InputError unless the field matches g and every value is finite and > 0.
void validate_field(const PermeabilityField& field, const GridHierarchy& g);

PermeabilityField constant_field(const GridHierarchy& g, double kappa);

} // namespace mgms
