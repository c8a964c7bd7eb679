"""Radial profile of the weighted residual of v0 and v1 at one eps.

Prints r, (1+r^2)^((N-2)/2) max|Xi| for both versions, which shows where each
residual attains its weighted sup (core versus far field).
"""

import argparse

import numpy as np

from yamabe_concentration.config import resolve_geometry
from yamabe_concentration.construction.residual import build_state, residual
from yamabe_concentration.manifold import load_geometry


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--geometry", default="circle_constant")
    ap.add_argument("--eps", type=float, default=1e-3)
    ap.add_argument("--M", type=int, default=2048)
    ap.add_argument("--node", type=int, default=0)
    ap.add_argument("--samples", type=int, default=40)
    args = ap.parse_args()
    model = load_geometry(resolve_geometry(args.geometry))
    state = build_state(model, args.eps, "sub", "v1", M=args.M)
    r0 = residual(state, model, "v0", nodes=[args.node])
    r1 = residual(state, model, "v1", nodes=[args.node])
    r = state.grid.nodes
    n = r0.radial_profile.size
    print(f"eps = {args.eps}: ||Xi(v0)|| = {r0.norm:.6g}, ||Xi(v1)|| = {r1.norm:.6g}")
    print(f"{'r':>12} {'v0':>14} {'v1':>14}")
    for i in np.unique(np.geomspace(1, n - 1, args.samples).astype(int)):
        print(f"{r[i]:12.5g} {r0.radial_profile[i]:14.6g} {r1.radial_profile[i]:14.6g}")


if __name__ == "__main__":
    main()
