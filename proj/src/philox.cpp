#include "interbank/philox.hpp"

#include <cmath>

namespace interbank {

namespace {

// Degree-7 polynomial by Estrin's scheme (shorter dependency chain than Horner).
double estrin7(const double (&c)[8], double x) {
  const double x2 = x * x;
  const double x4 = x2 * x2;
  const double lo = (c[0] + c[1] * x) + x2 * (c[2] + c[3] * x);
  const double hi = (c[4] + c[5] * x) + x2 * (c[6] + c[7] * x);
  return lo + x4 * hi;
}

using Lanes = double __attribute__((vector_size(16)));

Lanes estrin7(const double (&c)[8], Lanes x) {
  const Lanes x2 = x * x;
  const Lanes x4 = x2 * x2;
  const Lanes lo = (c[0] + c[1] * x) + x2 * (c[2] + c[3] * x);
  const Lanes hi = (c[4] + c[5] * x) + x2 * (c[6] + c[7] * x);
  return lo + x4 * hi;
}

// Wichura's AS241 (PPND16) rational approximations.
constexpr double a[8] = {3.3871328727963666080e0,  1.3314166789178437745e+2, 1.9715909503065514427e+3,
                         1.3731693765509461125e+4, 4.5921953931549871457e+4, 6.7265770927008700853e+4,
                         3.3430575583588128105e+4, 2.5090809287301226727e+3};
constexpr double b[8] = {1.0,
                         4.2313330701600911252e+1,
                         6.8718700749205790830e+2,
                         5.3941960214247511077e+3,
                         2.1213794301586595867e+4,
                         3.9307895800092710610e+4,
                         2.8729085735721942674e+4,
                         5.2264952788528545610e+3};
constexpr double c[8] = {1.42343711074968357734e0,  4.63033784615654529590e0,  5.76949722146069140550e0,
                         3.64784832476320460504e0,  1.27045825245236838258e0,  2.41780725177450611770e-1,
                         2.27238449892691845833e-2, 7.74545014278341407640e-4};
constexpr double d[8] = {1.0,
                         2.05319162663775882187e0,
                         1.67638483018380384940e0,
                         6.89767334985100004550e-1,
                         1.48103976427480074590e-1,
                         1.51986665636164571966e-2,
                         5.47593808499534494600e-4,
                         1.05075007164441684324e-9};
constexpr double e[8] = {6.65790464350110377720e0,  5.46378491116411436990e0,  1.78482653991729133580e0,
                         2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                         2.71155556874348757815e-5, 2.01033439929228813265e-7};
constexpr double f[8] = {1.0,
                         5.99832206555887937690e-1,
                         1.36929880922735805310e-1,
                         1.48753612908506148525e-2,
                         7.86869131145613259100e-4,
                         1.84631831751005468180e-5,
                         1.42151175831644588870e-7,
                         2.04426310338993978564e-15};

}  // namespace

double normal_quantile(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * estrin7(a, r) / estrin7(b, r);
  }
  double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
  double z;
  if (r <= 5.0) {
    r -= 1.6;
    z = estrin7(c, r) / estrin7(d, r);
  } else {
    r -= 5.0;
    z = estrin7(e, r) / estrin7(f, r);
  }
  return q < 0.0 ? -z : z;
}

void normal_block(std::uint64_t seed, std::uint64_t path, std::uint32_t step, std::uint32_t block, double out[4]) {
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const Philox4x32::Counter ctr{block, step, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  const auto bits = Philox4x32::apply(ctr, key);
  // Central branch two lanes at a time; tails are patched afterwards.
  for (int pair = 0; pair < 4; pair += 2) {
    const Lanes q = {to_unit_open(bits[pair]) - 0.5, to_unit_open(bits[pair + 1]) - 0.5};
    const Lanes r = 0.180625 - q * q;
    const Lanes z = q * estrin7(a, r) / estrin7(b, r);
    for (int i = 0; i < 2; ++i) out[pair + i] = std::abs(q[i]) <= 0.425 ? z[i] : normal_quantile(q[i] + 0.5);
  }
}

}  // namespace interbank
