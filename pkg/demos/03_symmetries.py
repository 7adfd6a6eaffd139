"""Flow tests, brackets and back-substitution for the nine generators.

On omega^2 = 1 with sigma = 1 every G2..G9 maps solutions to solutions at
second order in the flow parameter.  On the toy profile the translation G1
does not: its residual shrinks only linearly.
"""

import math

import numpy as np

from ermakov.dynamics import integrate
from ermakov.pinney import FundamentalPair, Phase, PinneySolution, fundamental_pair, pinney_sigma
from ermakov.reduction import ConstantProfile, integrate_reduced, pushforward, reduce_state
from ermakov.symmetry import back_transformed_generators, closure_check, flow_symmetry_test, point_generators, substitution_audit
from ermakov.systems import ErmakovSystem

ps1 = PinneySolution(FundamentalPair.harmonic(1.0, 0.0), 1.0, 0.0, 1.0)
G = point_generators(ps1, Phase(ps1, 0.0))
base = integrate(lambda t, y: np.array([y[1], -y[0]]), [0.7, 0.3], (0.0, 3.0), 1e-12)
print("omega^2 = 1:")
for g in G:
    v = flow_symmetry_test(g, ConstantProfile(1.0), base)
    print(f"  {g.name}: R(eps) = {', '.join(f'{r:.2e}' for r in v.details['residual_by_eps'])}  p = {v.order:.3g}")

pts = np.random.default_rng(42).uniform([0.0, -1.0], [3.0, 1.0], (5, 2))
v = closure_check([G[1], G[2], G[5]], pts)
print(f"closure of G2, G3, G6: residual {v.residual_max:.1e}")
for bracket, row in v.details["structure_constants"].items():
    print(f"  {bracket} = " + " + ".join(f"{c:+.3g} {k}" for k, c in row.items() if c))

pf = pushforward(ErmakovSystem("toy"), (1.0, 1.0, 0.1, -0.1), (0.0, 1.0))
ps = pinney_sigma(fundamental_pair(pf.profile, math.pi / 4, tol=1e-12))
ph = Phase(ps, math.pi / 4)
Gt = point_generators(ps, ph)
sol = integrate_reduced(pf.profile, reduce_state(pf.states[0], pf.law), pf.interval, 1e-12)
print("toy profile:")
for g in Gt:
    v = flow_symmetry_test(g, pf.profile, sol, mode="report")
    print(f"  {g.name}: pairwise orders {', '.join(f'{p:.2f}' for p in v.details['pairwise_orders']) or 'exact'}")

V = back_transformed_generators(ps, ph, pf.law)
print("back-substitution (max coefficient error per convention):")
for i in range(10):
    v = substitution_audit(Gt[i] if i < 9 else None, V[i], pf.states, pf.law)
    if v.details.get("introduced_generator"):
        print(f"  {V[i].name}: no reduced counterpart")
        continue
    lit, std = v.details["paper_literal"], v.details["chain_rule"]
    print(f"  {V[i].name}: literal {max(lit.values()):.2e}   chain rule {max(std.values()):.2e}")
