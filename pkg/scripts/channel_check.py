"""Kraus amplitude damping vs RK4 Lindblad integration over a (gamma, t) grid.

    python3 scripts/channel_check.py --n-states 20
"""
import argparse

from witness_bounds.cli import ChannelCheckConfig, channel_deviation


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n-states", type=int, default=20)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    print("gamma,t,max_deviation")
    for gamma in (0.0, 0.5, 1.0, 2.0):
        for t in (0.1, 0.7, 2.0):
            worst, _ = channel_deviation(ChannelCheckConfig(gamma=gamma, t=t, n_states=args.n_states, seed=args.seed))
            print(f"{gamma},{t},{worst:.3e}")


if __name__ == "__main__":
    main()
