"""Print the projection constants and their ratios for N = 5..12."""

import argparse

from yamabe_concentration.constants import compute_constants


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, nargs="+", default=list(range(5, 13)))
    args = ap.parse_args()
    print(f"{'N':>3} {'c1':>14} {'c2':>14} {'c3':>14} {'c4':>14} {'|c3|/c1':>10} {'a_N':>10} "
          f"{'c4/c1':>10} {'b_N':>10} {'c2/c1':>10}")
    for N in args.N:
        c = compute_constants(N)
        print(f"{N:>3} {c.c1:14.8g} {c.c2:14.8g} {c.c3:14.8g} {c.c4:14.8g} {c.ratio_a:10.6f} {c.a_N:10.6f} "
              f"{c.ratio_b:10.6f} {c.b_N:10.6f} {c.ratio_c2:10.6f}")


if __name__ == "__main__":
    main()
