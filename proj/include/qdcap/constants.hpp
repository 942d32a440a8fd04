#pragma once

namespace qdcap {

/// Vacuum permittivity in aF/nm.
inline constexpr double kEpsilon0 = 8.8541878128e-3;

/// Elementary charge in aF*V (1 aF*V = 1e-18 C).
inline constexpr double kElementaryCharge = 0.1602176634;

/// Elementary charge in coulombs.
inline constexpr double kElementaryChargeC = 1.602176634e-19;

/// nm^2 -> cm^2
inline constexpr double kNm2ToCm2 = 1.0e-14;

/// Hard floor on any grid spacing (nm).
inline constexpr double kMinCellFloorNm = 0.01;

}  // namespace qdcap
