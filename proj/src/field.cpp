#include "mgms/field.hpp"

#include <cmath>
#include <string>

#include "mgms/error.hpp"
#include "mgms/grid.hpp"

namespace mgms {

void validate_field(const PermeabilityField& field, const GridHierarchy& g) {
    if (field.n != g.n() || field.values.size() != static_cast<std::size_t>(g.n_cells())) {
        throw InputError("field: size " + std::to_string(field.n) + " does not match grid n=" +
                         std::to_string(g.n()));
    }
    for (std::size_t c = 0; c < field.values.size(); ++c) {
        const double k = field.values[c];
        if (!std::isfinite(k) || k <= 0.0) {
            throw InputError("field: permeability must be finite and positive (cell " +
                             std::to_string(c) + " has " + std::to_string(k) + ")");
        }
    }
}

PermeabilityField constant_field(const GridHierarchy& g, double kappa) {
    PermeabilityField f;
    f.n = g.n();
    f.values.assign(static_cast<std::size_t>(g.n_cells()), kappa);
    return f;
}

} // namespace mgms
