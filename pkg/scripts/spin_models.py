"""Least-squares phases and F_ideal for spin-model targets on a 12-ion equal-spaced chain."""

import argparse
from pathlib import Path

from iongates.targets import builtin_target, ideal_phases, write_coupling_csv
from iongates.trap_modes import TrapModel, normal_modes

TARGETS = {
    "nearest_neighbour": {},
    "nn_with_nnn": {"ratio": -0.25},
    "ssh_trivial": {"s": 0},
    "ssh_topological": {"s": 1},
}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-ions", type=int, default=12)
    p.add_argument("--out", default="results")
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for curvature in (None, "uniform"):
        label = curvature or "balanced"
        modes = normal_modes(args.n_ions, TrapModel(kind="equal_spaced", curvature=curvature))
        for name, params in TARGETS.items():
            kind = "ssh" if name.startswith("ssh") else name
            tgt = ideal_phases(builtin_target(kind, args.n_ions, **params), modes)
            write_coupling_csv(out / f"coupling_{name}_{label}.csv", tgt.j_ideal)
            print(f"{label:9s} {name:18s} F_ideal = {tgt.F_ideal:.5f}")


if __name__ == "__main__":
    main()
