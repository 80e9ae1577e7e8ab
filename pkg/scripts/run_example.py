"""Solve one example at one resolution and print its errors."""

import argparse

from dgife import RunConfig, run_single

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--example", default="1")
parser.add_argument("--ns", type=int, default=20)
parser.add_argument("--theta", type=float, default=0.5)
parser.add_argument("--epsilon", type=int, default=1)
args = parser.parse_args()

cfg = RunConfig(
    example=args.example, ns=[args.ns], theta=args.theta, epsilon=args.epsilon,
    sigma=100.0 if args.epsilon == -1 else 1.0, energy=True,
)
r = run_single(cfg, args.ns)
print(f"Ns={r.ns} h={r.h:.4g} dt={r.dt:.4g}")
print(f"  max error      {r.err_inf:.4e}")
print(f"  L2 error       {r.err_l2:.4e}")
print(f"  H1 semi error  {r.err_h1:.4e}")
print(f"  energy error   {r.err_energy:.4e}")
