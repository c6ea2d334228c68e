#pragma once

#include "qcorr/errors.hpp"

#include <cmath>

namespace qcorr {

/// Physical constants shared by every formula in the library.
///
/// Units are free as long as they are consistent; the default preset is
/// natural units hbar = mass = 1. hbar = 0 is admitted so that the
/// classical limit of the thermo-quantum moment equation can be run
/// directly; operations that are meaningless without quantum action
/// (vacuum spreading, momentum covariance, energy, decorrelation times)
/// reject hbar = 0 with a DomainError.
struct PhysConsts {
    double hbar = 1.0;  ///< quantum of action, >= 0
    double mass = 1.0;  ///< particle mass, > 0
    double gamma = 0.0; ///< Ohmic friction coefficient (inverse time), >= 0
    double kbt = 0.0;   ///< thermal energy k_B * T, >= 0

    static PhysConsts natural_units() { return PhysConsts{1.0, 1.0, 0.0, 0.0}; }

    void validate() const {
        if (!std::isfinite(hbar) || !std::isfinite(mass) || !std::isfinite(gamma) ||
            !std::isfinite(kbt))
            throw DomainError("PhysConsts: all fields must be finite");
        if (hbar < 0.0)
            throw DomainError("PhysConsts: hbar must be >= 0");
        if (mass <= 0.0)
            throw DomainError("PhysConsts: mass must be > 0");
        if (gamma < 0.0)
            throw DomainError("PhysConsts: gamma must be >= 0");
        if (kbt < 0.0)
            throw DomainError("PhysConsts: kbt must be >= 0");
    }

    void require_hbar() const {
        if (hbar <= 0.0)
            throw DomainError("operation requires hbar > 0");
    }

    void require_gamma() const {
        if (gamma <= 0.0)
            throw DomainError("operation requires gamma > 0");
    }

    void require_kbt() const {
        if (kbt <= 0.0)
            throw DomainError("operation requires kbt > 0");
    }

    /// Einstein diffusion constant D = k_B T / (m gamma). Requires gamma > 0.
    double diffusion() const {
        require_gamma();
        return kbt / (mass * gamma);
    }
};

} // namespace qcorr
