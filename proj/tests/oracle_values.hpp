// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
//
// Generated by tools/oracles/derive_values.py — values derived by
// independent quadrature / LP oracles and frozen for the test suite.
// Regenerate with: python3 tools/oracles/derive_values.py
#pragma once

namespace toda::oracle {

inline constexpr double kSphereRadius = 0.28209479177387814;
inline constexpr double kHalfCircumference = 0.88622692545275794;
inline constexpr double kQuarterCircumference = 0.44311346272637897;
inline constexpr double kX3SquaredIntegral = 0.026525823848649224;
inline constexpr double kDirichletX3 = 0.66666666666666663;

// Scalar bubble energy: fitted I_rho slope vs log lambda over
// lambda in {1e2, 1e2.5, 1e3}; asymptotic slope is 16*pi - 4*rho.
inline constexpr double kBubbleSlopeRhoTwoPi = 25.113979006219296;
inline constexpr double kBubbleSlopeRhoSixPi = -25.111259225987084;
inline constexpr double kBubbleSlopeRhoTenPi = -75.336497458193435;
inline constexpr double kBubbleExpIntegralLimit = 3.1415926535897931;
inline constexpr double kBubbleMassInTenOverLambda = 0.99009900990099009;

// Concentration scale closed forms (flat-model analyses).
inline constexpr double kFlatDiscSigmaOverR = 0.033314830232638482;
inline constexpr double kFlatBubbleSigmaTimesLambda = 0.18257418583505536;

// Exact transport values (scipy.optimize.linprog, method=highs).
inline constexpr double kW1_half_mass_antipodal = 0.44311346272637897;
inline constexpr double kW1_three_site_to_north = 0.22155673136318949;
inline constexpr double kW1_generic_3x2 = 0.28155513511490782;

// Atom-repulsion functional: k=2 antipodal, equal weights,
// delta1 = 0.0003125.
inline constexpr double kFAntipodalHalfHalf = 3208;

// Spherical-cap area on the unit-area sphere at radius 0.2.
inline constexpr double kCapAreaR02 = 0.12048732552356062;

}  // namespace toda::oracle
