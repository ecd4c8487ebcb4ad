#pragma once

#include "topo/mesh.hpp"

namespace topo {

struct Scales {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;
};

struct Exponents {
  double e1 = 1.0;  // latitude / tube profile
  double e2 = 1.0;  // longitude / ring profile
};

struct GridResolution {
  int nu = 32;
  int nv = 32;
};

/// Signed power of cos/sin used by superquadrics.
double signed_cos_pow(double angle, double exponent);
double signed_sin_pow(double angle, double exponent);

/// Closed genus-0 superellipsoid. Each pole is a single apex vertex shared by a
/// triangle fan, so V = nu * (nv - 1) + 2 and F = 2 * nu * (nv - 1).
TriangleMesh superellipsoid_mesh(Scales scales, Exponents exponents, GridResolution resolution);

/// Closed genus-1 supertoroid on a periodic nu x nv grid (V = nu*nv, F = 2*nu*nv).
/// The tube has unit radius before scaling, so ring_radius must exceed 1.
TriangleMesh supertoroid_mesh(Scales scales, double ring_radius, Exponents exponents,
                              GridResolution resolution);

/// Capped cone with its base on z = 0 and apex at (0, 0, height).
TriangleMesh cone_mesh(double radius, double height, int segments);

}  // namespace topo
