"""Global existence despite superlinear growth: the truncation device.

The existence preset has drift v^2 - u^3 and diffusion v^2 (v is the
delayed state), which grow much faster than linearly, so classical
global-Lipschitz existence theory does not apply.  The growth-bound
hypothesis on the energy functional U = ||x||_H^2 rescues it: this script
verifies that bound on random states, then illustrates the non-explosion
conclusion empirically by running the radially truncated problems and
estimating how often their paths leave balls of growing radius.
"""

from sedes import (
    FourierSampler,
    check_khasminskii,
    explosion_scan,
    make_preset,
    simulate,
    stopping_time_sigma_k,
    truncate_problem,
)

preset = make_preset("eq16", t_final=5.0, seed=0)
p = preset.problem

print("existence preset: drift v^2 - u^3, diffusion v^2, delay tau = %g" % p.tau)
print("initial history 0.1 sin(x), ||psi||_H = %.4f" % p.psi_h_bound)
print()

sampler = FourierSampler(p.grid, seed=0, t_max=p.t_final)
rep = check_khasminskii(p, preset.lyapunov, sampler, 5000)
print("growth-bound check (lam1=%.3f, lam2=%.3f, W = integral of u^4):"
      % (preset.lyapunov.lam1, preset.lyapunov.lam2))
print("  %s, worst relative margin %.3e over %d samples"
      % ("PASS" if rep.passed else "FAIL", rep.max_violation, rep.n_samples))
print()

print("exit probabilities of the truncated problems over t <= 5, 100 paths:")
rows = explosion_scan(p, [2.0, 4.0, 8.0, 16.0], n_paths=100, horizon=5.0)
for r in rows:
    print("  k = %4g   P(exit by t=5) = %.3f  (+/- %.3f)"
          % (r.k, r.probability, r.stderr))
print("nonincreasing in k and heading to zero: no explosion in sight")
print()

# truncation is invisible while the path stays inside the ball
traj_full = simulate(p, path_id=3)
traj_trunc = simulate(truncate_problem(p, 8.0), path_id=3)
same = bool((traj_full.h_norms == traj_trunc.h_norms).all())
print("truncated and untruncated paths coincide bitwise inside the ball:",
      same)
print("first crossing of ||x||_H >= 2 on path 3:",
      stopping_time_sigma_k(traj_full, 2.0))
