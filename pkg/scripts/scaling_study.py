"""Residual scaling of v0 and v1 on a geometry, over the default eps list and
optionally over a smaller, asymptotic one.

    python3 scripts/scaling_study.py --geometry circle_constant --extended
"""

import argparse

from yamabe_concentration.config import DEFAULT_EPS, resolve_geometry
from yamabe_concentration.construction.residual import scaling_study
from yamabe_concentration.manifold import load_geometry

EXTENDED_EPS = (1e-4, 3e-5, 1e-5, 3e-6)


def report(model, eps_list, M, nodes):
    for version in ("v0", "v1"):
        out = scaling_study(model, version, eps_list, M=M, nodes=nodes)
        print(f"{version}: slope {out['slope']:.4f}")
        for eps, norm, const in zip(out["eps"], out["norms"], out["constants"]):
            print(f"    eps={eps:<8.1e} norm={norm:<12.6g} norm/eps={const:.6g}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--geometry", default="circle_constant")
    ap.add_argument("--M", type=int, default=2048)
    ap.add_argument("--nodes", type=int, nargs="+", help="restrict to these nodes of K (e.g. 0 for constant data)")
    ap.add_argument("--extended", action="store_true", help="also run eps in [3e-6, 1e-4] with M = 8192")
    args = ap.parse_args()
    model = load_geometry(resolve_geometry(args.geometry))
    print(f"default eps list {DEFAULT_EPS}, M = {args.M}")
    report(model, DEFAULT_EPS, args.M, args.nodes)
    if args.extended:
        print(f"extended eps list {EXTENDED_EPS}, M = 8192")
        report(model, EXTENDED_EPS, 8192, args.nodes)


if __name__ == "__main__":
    main()
