"""Closure-adapted Fano bound against random test channels.

Every kernel's mutual information must sit above the bound computed from its
closure error probability.
"""
import numpy as np

from deductive_rd import fano_bound, gen_example
from deductive_rd.consequences import identity_kernel, random_kernel

src = gen_example("EX_MIN")
exact = fano_bound(src, identity_kernel(src))
print(f"identity kernel: I={exact.information:.4f} eps={exact.eps:.3f} bound={exact.bound:.4f}")

g = np.random.Generator(np.random.Philox(11))
slack = []
for _ in range(500):
    rep = fano_bound(src, random_kernel(len(src.stored), len(src.recon), g))
    slack.append(rep.information - rep.bound)
print(f"500 random kernels: min slack {min(slack):.3e}, violations {sum(s < -1e-9 for s in slack)}")
