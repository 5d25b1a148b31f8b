#!/usr/bin/env python3
"""Independent check of exported circuits.

Usage:
    ico-battery export-circuits --points 10 --out /tmp/qasm
    python3 scripts/check_qasm.py /tmp/qasm

Each program is executed by a small numpy interpreter that expands rxx/ryy
through the gate bodies declared in the file, so the decompositions are
checked too. p(+) and E = p(e) are compared with the closed form for N = 2.
"""

import csv
import math
import re
import sys
from pathlib import Path

import numpy as np

QUBITS = {"d": 0, "q": 1, "c1": 2, "c2": 3}
N_QUBITS = 4


def rz(a):
    return np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])


def rx(a):
    c, s = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)


def cp(a):
    return np.diag([1, 1, 1, np.exp(1j * a)])


def apply(state, m, qubits):
    psi = state.reshape([2] * N_QUBITS)
    k = len(qubits)
    psi = np.moveaxis(psi, qubits, list(range(k)))
    shape = psi.shape
    psi = (m @ psi.reshape(2**k, -1)).reshape(shape)
    return np.moveaxis(psi, list(range(k)), qubits).reshape(-1)


def angle(expr):
    return float(eval(expr, {"__builtins__": {}}, {"pi": math.pi}))


def run_gate(state, name, arg, qubits, defs):
    if name in defs:
        params, formals, body = defs[name]
        env = dict(zip(formals, qubits))
        for stmt in body:
            n, a, qs = parse_stmt(stmt)
            a = None if a is None else a.replace(params[0], repr(arg)) if params else a
            state = run_gate(state, n, None if a is None else angle(a), [env[x] for x in qs], defs)
        return state
    table = {
        "h": lambda: H,
        "x": lambda: X,
        "rz": lambda: rz(arg),
        "rx": lambda: rx(arg),
        "cx": lambda: CX,
        "cz": lambda: CZ,
        "cp": lambda: cp(arg),
    }
    return apply(state, table[name](), qubits)


STMT = re.compile(r"^(\w+)(?:\(([^)]*)\))?\s+(.+)$")


def parse_stmt(stmt):
    m = STMT.match(stmt.strip().rstrip(";"))
    name, arg, args = m.group(1), m.group(2), [a.strip() for a in m.group(3).split(",")]
    return name, arg, args


def simulate(text):
    defs = {}
    state = np.zeros(2**N_QUBITS, dtype=complex)
    state[0] = 1
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("gate "):
            head, body = line[5:].split("{", 1)
            m = re.match(r"(\w+)\(([^)]*)\)\s+(.+)", head.strip())
            params = [p.strip() for p in m.group(2).split(",")]
            formals = [f.strip() for f in m.group(3).split(",")]
            stmts = [s for s in body.rstrip("}").split(";") if s.strip()]
            defs[m.group(1)] = (params, formals, stmts)
            continue
        if line == "// measurement":
            break
        if not line or line.startswith(("//", "OPENQASM", "include", "qubit", "bit")):
            continue
        name, arg, args = parse_stmt(line)
        state = run_gate(state, name, None if arg is None else angle(arg), [QUBITS[a] for a in args], defs)
    return state


def probabilities(state):
    psi = state.reshape(2, 2, 4)
    plus = (psi[0] + psi[1]) / math.sqrt(2)
    minus = (psi[0] - psi[1]) / math.sqrt(2)
    p_plus = float(np.sum(np.abs(plus) ** 2))
    excited = float(np.sum(np.abs(psi[:, 1, :]) ** 2))
    return p_plus, excited


def closed_form(t, theta, phi):
    # N = 2: α0 = (e^{-iφ/2} cos θ)^2 with θ = ωλt/2, φ = ωt/2
    x = theta
    stay = np.exp(-0.5j * phi) * math.cos(x)
    swap = np.exp(-0.5j * phi) * (-1j * math.sin(x))
    both = np.exp(-1.5j * phi)
    a = [stay**2, both * swap, swap * stay]
    s = abs(a[1]) ** 2 + abs(a[2]) ** 2
    c = 2 * (a[1] * np.conj(a[2])).real
    p1 = abs(a[0]) ** 2 + (c + s) / 2
    return p1, 1 - math.cos(x) ** 4


def main(directory):
    root = Path(directory)
    worst = 0.0
    with open(root / "manifest.csv") as f:
        rows = list(csv.DictReader(f))
    for row in rows:
        p_plus, excited = probabilities(simulate((root / row["file"]).read_text()))
        want_plus, want_e = closed_form(float(row["t"]), float(row["theta"]), float(row["phi"]))
        worst = max(worst, abs(p_plus - want_plus), abs(excited - want_e))
    print(f"{len(rows)} circuits, max deviation {worst:.3e}")
    return 0 if worst <= 1e-6 else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1] if len(sys.argv) > 1 else "."))
