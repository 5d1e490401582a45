"""Regenerate the bundled fixture files under src/wcrisk/data."""

import json
from pathlib import Path

import numpy as np

from wcrisk.io import estimate_moments, read_returns_csv
from wcrisk.oracle import integrate_spectrum
from wcrisk.spectra import from_dict

DATA = Path(__file__).resolve().parents[1] / "src" / "wcrisk" / "data"


def dump(name, obj):
    (DATA / name).write_text(json.dumps(obj, indent=2) + "\n")


def main():
    rng = np.random.default_rng(20240611)
    mu = np.array([0.006, 0.009, 0.012])
    vol = np.array([0.03, 0.05, 0.08])
    corr = np.array([[1.0, 0.3, 0.1], [0.3, 1.0, 0.4], [0.1, 0.4, 1.0]])
    R = rng.multivariate_normal(mu, corr * np.outer(vol, vol), size=500)
    with open(DATA / "returns.csv", "w") as fh:
        fh.write("bonds,equity,emerging\n")
        for row in R:
            fh.write(",".join(f"{v:.6f}" for v in row) + "\n")
    mm = estimate_moments(read_returns_csv(DATA / "returns.csv"))
    dump("moments.json", {"assets": ["bonds", "equity", "emerging"],
                          "mu": mm.mean.tolist(), "sigma": mm.cov.tolist()})

    dump("problem_simplex.json", {
        "assets": ["bonds", "equity", "emerging"],
        "mu": mm.mean.tolist(), "sigma": mm.cov.tolist(),
        "constraints": {},
        "spectra": [{"kind": "cvar", "epsilon": 0.05}],
    })
    dump("problem_returns.json", {
        "returns": "returns.csv",
        "constraints": {"E": [[1, 1, 1]], "f": [1], "A": [[0, 0, 1]], "b": [0.4],
                        "bounds": [[0, 1], [0, 1], [0, 1]]},
        "spectra": [{"kind": "exponential", "k": 5.0}, {"kind": "cvar", "epsilon": 0.1}],
    })
    dump("problem_polytopic.json", {
        "assets": ["a", "b"],
        "mu": [0.08, 0.12],
        "sigma": [[0.04, 0.006], [0.006, 0.09]],
        "spectra": ["cvar:0.1"],
        "uncertainty": {"vertices": [
            {"mu": [0.08, 0.12], "sigma": [[0.04, 0.006], [0.006, 0.09]]},
            {"mu": [0.09, 0.10], "sigma": [[0.06, 0.0], [0.0, 0.07]]},
        ]},
    })
    dump("distribution.json", {"atoms": [-1.0, 0.0, 0.5, 2.0, 4.0],
                               "probs": [0.1, 0.4, 0.3, 0.15, 0.05]})
    dump("spectra.json", {"spectra": [
        {"kind": "cvar", "epsilon": 0.05},
        {"kind": "exponential", "k": 10.0},
        {"kind": "piecewise", "breakpoints": [0.0, 0.5, 0.9, 1.0], "values": [0.5, 1.0, 3.5]},
    ]})

    # sandwich fixtures: expected kappa from the adaptive Simpson oracle
    spectra = [
        {"kind": "cvar", "epsilon": 0.05},
        {"kind": "cvar", "epsilon": 0.5},
        {"kind": "piecewise", "breakpoints": [0.0, 0.5, 0.9, 1.0], "values": [0.5, 1.0, 3.5]},
        {"kind": "piecewise", "breakpoints": [0.0, 0.2, 0.7, 0.95, 1.0], "values": [0.25, 0.75, 1.5, 4.0]},
    ]
    moments = [[0.0, 1.0], [1.5, 0.3], [-2.0, 4.0]]
    for s in spectra:
        s["kappa"] = float(np.sqrt(integrate_spectrum(from_dict(s), power=2) - 1.0))
    dump("verify_fixtures.json", {"spectra": spectra, "moments": moments})


if __name__ == "__main__":
    main()
