"""How much inference the receiver must run before a channel budget suffices.

With bounded inference depth a redundant fact may have to be sent anyway, so the
rate phi(delta) falls as delta grows.  Given a budget kappa*C, the thresholds are
the smallest depths at which phi drops under it.
"""
from deductive_rd import ChannelModel, depth_thresholds, gen_example, rate_depth_sweep

src = gen_example("EX_DEPTH")
sweep = rate_depth_sweep(src)
print("delta  phi(delta)  |core_delta|")
for d, (phi, core) in enumerate(zip(sweep.phi, sweep.cores)):
    print(f"{d:5d}  {phi:10.4f}  {len(core):5d}")

channel = ChannelModel.bsc(0.11)
print(f"\nBSC(0.11) capacity {channel.capacity:.4f} bits/use")
for kappa in (0.5, 1.5, 2.0, 4.0):
    th = depth_thresholds(src, channel, kappa)
    print(f"kappa={kappa:3.1f} budget={th.budget:.4f}  achievable at {th.achievable}  "
          f"necessary at {th.necessary}  ({th.regime})")
