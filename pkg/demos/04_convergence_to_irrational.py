"""Approaching an irrational parameter through its dyadic roundings.

An irrational parameter is never instantiated; the solves run at
lambda_n = round(2^n t)/2^n and the tracked quantities settle down.
Tracked points are (word, corner) addresses, which exist canonically at
every parameter.
"""

import agres

TARGET = "1/sqrt8"

sched = agres.dyadic_schedule(TARGET, range(4, 11))
print(f"dyadic schedule for {TARGET}:")
print("  " + ", ".join(f"n={n}: {lam}" for n, lam in sched.entries))

print("\nsolved weight and tracked quantities along the schedule:")
report = agres.convergence_report(
    TARGET, 0.5, range(4, 11),
    [(((), 1), ((), 2)), (((4,), 1), ((4,), 2))],
    alpha=1.0, m=3)
print(f"  {'n':>2} {'lambda':>9} {'r':>12} {'R(p1,p2)':>10} "
      f"{'R(F4p1,F4p2)':>13} {'u(F4p1,F4p2)':>13}")
for row in report.rows:
    print(f"  {row.n:>2} {str(row.lam):>9} {row.r:>12.8f} "
          f"{row.resistances[0]:>10.6f} {row.resistances[1]:>13.8f} "
          f"{row.resolvents[1]:>13.8f}")

print("\nverdicts (trailing trend and final gap):")
for name, v in report.verdicts.items():
    print(f"  {name}: trend nonincreasing={v['trend_nonincreasing']} "
          f"final gap={v['final_gap']:.2e}")

print("\nvariational diagnostic: harmonic energies and a transplanted competitor")
table = agres.gamma_diagnostic(TARGET, 0.5, range(4, 9), (1.0, 0.0, 0.0), m=3)
for row in table.rows:
    print(f"  n={row.n} lambda={row.lam}: harmonic={row.harmonic_energy:.10f} "
          f"transplant={row.transplant_energy:.10f} "
          f"minimality={row.minimality_ok}")

print("\nattractor distance bound along the schedule:")
lams = sched.lambdas()
for a, b in zip(lams, lams[1:]):
    if a == b:
        continue
    est, bound, ok = agres.hausdorff_check(a, b, depth=8)
    print(f"  {a} -> {b}: estimate {est:.6f}, bound {float(bound):.6f}, pass {ok}")
