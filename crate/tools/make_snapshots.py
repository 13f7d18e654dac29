"""Generate the bundled synthetic calibration snapshots.

The snapshots mimic a 27-qubit heavy-hex device. Per-qubit and per-gate
values are random draws rescaled so that their means hit the target values
exactly. Draws are repeated until every CX error exceeds the infidelity
its relaxation alone would cause, as on a real calibration. Run
from the repository root:

    python3 tools/make_snapshots.py
"""

import json

import numpy as np

COUPLING = [
    [0, 1], [1, 2], [1, 4], [2, 3], [3, 5], [4, 7], [5, 8], [6, 7], [7, 10],
    [8, 9], [8, 11], [10, 12], [11, 14], [12, 13], [12, 15], [13, 14],
    [14, 16], [15, 18], [16, 19], [17, 18], [18, 21], [19, 20], [19, 22],
    [21, 23], [22, 25], [23, 24], [24, 25], [25, 26],
]
NUM_QUBITS = 27
CX_DURATIONS = [284.4, 320.0, 355.6, 391.1, 426.7, 462.2, 497.8]


def rescaled(rng, draw, mean, lo):
    while True:
        x = draw(rng)
        x = np.maximum(x, lo)
        x = x * (mean / x.mean())
        if (x >= lo * 0.5).all():
            return x


def process_fidelity(t1, t2, tau):
    """Process fidelity of thermal relaxation for time tau on one qubit."""
    g = 1.0 - np.exp(-tau / t1)
    coherence = np.exp(-tau / t2)
    return (1.0 + (1.0 - g) + 2.0 * coherence) / 4.0


def cx_relaxation_infidelity(t1a, t2a, t1b, t2b, tau):
    """Average gate infidelity of independent relaxation on both qubits."""
    f_pro = process_fidelity(t1a, t2a, tau) * process_fidelity(t1b, t2b, tau)
    return 1.0 - (4.0 * f_pro + 1.0) / 5.0


def snapshot(name, timestamp, seed, t1_mean, t1_sd, t2_mean, t2_sd, e1, e2, ro):
    rng = np.random.default_rng(seed)
    edges = COUPLING + [[b, a] for a, b in COUPLING]
    while True:
        t1 = rescaled(rng, lambda r: r.normal(t1_mean, t1_sd, NUM_QUBITS), t1_mean, 40.0)
        t2 = rescaled(
            rng, lambda r: r.lognormal(np.log(t2_mean), t2_sd, NUM_QUBITS), t2_mean, 30.0
        )
        if not (t2 <= 2.0 * t1).all():
            continue
        e_sx = rescaled(rng, lambda r: r.lognormal(np.log(e1), 0.5, NUM_QUBITS), e1, 1e-5)
        e_cx = rescaled(rng, lambda r: r.lognormal(np.log(e2), 0.4, len(COUPLING)), e2, 1e-4)
        # durations compatible with each edge's error
        cx_ns = []
        for (a, b), e in zip(COUPLING, e_cx):
            fits = [
                d for d in CX_DURATIONS
                if e > 1.1 * cx_relaxation_infidelity(t1[a], t2[a], t1[b], t2[b], d * 1e-3)
            ]
            cx_ns.append(float(rng.choice(fits)) if fits else None)
        cx_ok = all(d is not None for d in cx_ns)
        if cx_ok:
            break
    e_cx = np.concatenate([e_cx, e_cx])
    cx_ns = cx_ns + cx_ns
    p01 = rng.uniform(0.5 * ro, 1.5 * ro, NUM_QUBITS)
    p10 = rng.uniform(0.25 * ro, 0.75 * ro, NUM_QUBITS)

    qubits = [
        {
            "t1_us": float(t1[q]),
            "t2_us": float(t2[q]),
            "readout": {"p01": float(p01[q]), "p10": float(p10[q])},
        }
        for q in range(NUM_QUBITS)
    ]
    gates = []
    for q in range(NUM_QUBITS):
        for g in ("sx", "x"):
            gates.append({"name": g, "qubits": [q], "duration_ns": 35.56, "error": float(e_sx[q])})
    for (a, b), err, dur in zip(edges, e_cx, cx_ns):
        gates.append({"name": "cx", "qubits": [a, b], "duration_ns": float(dur), "error": float(err)})
    return {
        "name": name,
        "synthetic": True,
        "timestamp": timestamp,
        "note": "Synthetic draw; per-qubit values are random, only the means are targeted.",
        "qubits": qubits,
        "gates": gates,
        "coupling": COUPLING,
        "basis": ["cx", "rz", "sx", "x"],
    }


def main():
    kolkata = snapshot(
        "kolkata-like", "2023-11-28T05:37:00Z", 20231128,
        100.0, 25.0, 85.0, 0.3, 2.625e-4, 9.616e-3, 0.015,
    )
    mumbai = snapshot(
        "mumbai-like", "2023-11-28T05:37:00Z", 20231129,
        115.0, 30.0, 95.0, 0.3, 3.1e-4, 1.1e-2, 0.02,
    )
    for snap, path in ((kolkata, "kolkata_like.json"), (mumbai, "mumbai_like.json")):
        with open(f"crates/core/data/{path}", "w") as f:
            json.dump(snap, f, indent=1)
            f.write("\n")


if __name__ == "__main__":
    main()
