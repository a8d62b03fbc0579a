#pragma once

#include <Eigen/Dense>

namespace elastoray {

// One Dormand-Prince 5(4) step. Returns the fifth-order solution and writes
// the embedded error estimate (difference to the fourth-order solution).
template <int N, class Rhs>
Eigen::Matrix<double, N, 1> dopri5_step(const Rhs& f, const Eigen::Matrix<double, N, 1>& y, double h,
                                        Eigen::Matrix<double, N, 1>& err) {
  using V = Eigen::Matrix<double, N, 1>;
  constexpr double a21 = 1.0 / 5.0;
  constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                   a54 = -212.0 / 729.0;
  constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                   a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                   b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
  constexpr double e1 = b1 - 5179.0 / 57600.0, e3 = b3 - 7571.0 / 16695.0, e4 = b4 - 393.0 / 640.0,
                   e5 = b5 + 92097.0 / 339200.0, e6 = b6 - 187.0 / 2100.0, e7 = -1.0 / 40.0;

  const V k1 = f(y);
  const V k2 = f(V(y + h * a21 * k1));
  const V k3 = f(V(y + h * (a31 * k1 + a32 * k2)));
  const V k4 = f(V(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
  const V k5 = f(V(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
  const V k6 = f(V(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
  const V y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const V k7 = f(y5);
  err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  return y5;
}

}  // namespace elastoray
