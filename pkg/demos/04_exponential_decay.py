"""Mean-square exponential decay: predicted rate versus measured rate.

The divergence-form preset du = (a(t,x) u_x)_x + u (a + b v - u^2) dt
+ c u v dB is mean-square exponentially stable when nu - a > b^2 > 0 and
c^4 < 2.  The predicted bound on the decay exponent of E||x(t)||_H^2 is
-eps, with eps = min(eps1, eps2) the roots of

    alpha1 = eps1 + alpha2 e^{eps1 tau},     alpha3 = alpha4 e^{eps2 tau},

for alpha1 = 2(nu - a), alpha2 = 2 b^2, alpha3 = 1, alpha4 = c^4 / 2.
The bound is an upper bound on the limsup: the measured decay may be (and
here is) much faster, because the certificate discards the gap between
the ground eigenvalue and the rest of the spectrum.
"""

import numpy as np

from sedes import (
    fit_decay_rate_adaptive,
    make_preset,
    ms_ensemble,
    solve_decay,
)

nu, a, b, c, tau = 2.0, 0.5, 1.0, 1.0, 1.0
sol = solve_decay(2 * (nu - a), 2 * b * b, 1.0, 0.5 * c ** 4, tau)
print("decay prediction for nu=%g, a=%g, b=%g, c=%g, tau=%g:"
      % (nu, a, b, c, tau))
print("  eps1 = %.6f   (root of 3 = eps + 2 e^eps)" % sol.eps1)
print("  eps2 = %.6f   (= ln 2)" % sol.eps2)
print("  rate bound = %.4f  (gamma == 0, so mu = +inf is not binding)"
      % sol.bound)
print()

t_final = 25.0
preset = make_preset("eq24", nu=nu, a=a, b=b, c=c, tau=tau,
                     t_final=t_final, seed=0)
n_paths = 60
curve = ms_ensemble(preset.problem, n_paths)
rate, hw, window = fit_decay_rate_adaptive(curve)
print("measured over %d paths to t = %g:" % (n_paths, t_final))
print("  fitted slope of log E||x||_H^2 = %.4f +/- %.4f on window %s"
      % (rate, hw, list(window)))
print("  bound respected: fitted %.4f <= %.4f" % (rate, sol.bound),
      "=> PASS" if rate <= sol.bound + 2 * hw + 0.05 else "=> FAIL")
print()

print("mean-square curve (log10):")
for t in np.arange(0.0, 10.1, 2.0):
    i = int(np.argmin(np.abs(curve.times - t)))
    print("  t = %4.1f   log10 E||x||^2 = %7.2f"
          % (curve.times[i], np.log10(curve.mean[i])))
print()
print("the certificate only sees the coarse constants; the actual decay "
      "rides the full spectral gap and is about ten times faster")
