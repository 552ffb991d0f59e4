"""Walk through the small examples: core, zero-distortion rate, and an R(D) curve.

Run with ``python3 demos/core_and_rates.py``.
"""
from deductive_rd import extract_core, gen_example, rd_curve, zero_rate_general
from deductive_rd.info import entropy

for name in ("EX_ORDER", "EX_MIN", "EX_DEPTH", "EX_CONF"):
    src = gen_example(name)
    dec = extract_core(src)
    naive = entropy(src.probs)
    rate = zero_rate_general(src)
    print(f"{name:9s} stored={len(src.stored)} core={[str(a) for a in dec.core]}")
    print(f"          H(S)={naive:.4f} bits   R(0)={rate.value:.4f} bits   regime={rate.regime}")

# redundant facts cost nothing, so the curve starts below the entropy of S
src = gen_example("EX_MIN")
print("\nR(D) for EX_MIN under closure distortion")
for pt in rd_curve(src, 9).points:
    print(f"  D={pt.D:.4f}  R={pt.R:.4f}")
