"""File formats: JSON datasets and pole lists, CSV profiles and potentials."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_rows(path, header, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_fmt(v) for v in row])


def write_profile_csv(profile, path) -> None:
    """Columns x, Re/Im of psi, psi', psi''."""
    cols = [profile.x]
    for v in (profile.psi, profile.psi_x, profile.psi_xx):
        cols += [v.real, v.imag]
    _write_rows(path, ["x", "re_psi", "im_psi", "re_dpsi", "im_dpsi", "re_ddpsi", "im_ddpsi"], cols)


def write_potential_csv(x, Q, P, path) -> None:
    Q, P = np.asarray(Q), np.asarray(P)
    _write_rows(path, ["x", "re_Q", "im_Q", "re_P", "im_P"], [x, Q.real, Q.imag, P.real, P.imag])


def read_potential_csv(path):
    a = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return a[:, 0], a[:, 1] + 1j * a[:, 2], a[:, 3] + 1j * a[:, 4]


def write_marchenko_csv(sol, path, which: str = "F") -> None:
    """Long-format (x, y, Re, Im) table of F_hat (y > 0) or G_hat (y < 0)."""
    if which == "F":
        y, vals = sol.y, sol.F
    elif which == "G":
        y, vals = -sol.y, sol.G
    else:
        raise ValueError("which must be 'F' or 'G'")
    X = np.repeat(sol.x, y.size)
    Y = np.tile(y, sol.x.size)
    V = vals.reshape(-1)
    _write_rows(path, ["x", "y", f"re_{which}", f"im_{which}"], [X, Y, V.real, V.imag])


def write_json(obj, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True))


def read_json(path):
    return json.loads(Path(path).read_text())


def write_dataset(dataset, path) -> None:
    write_json(dataset.to_json_dict(), path)


def read_dataset(path):
    from .direct import ScatteringDataset
    return ScatteringDataset.from_json_dict(read_json(path))


def read_poles(path):
    """Pole list ``[{k_re, k_im, gamma_re, gamma_im}, ...]`` -> list of (k, gamma)."""
    items = read_json(path)
    try:
        return [(complex(p["k_re"], p["k_im"]), complex(p["gamma_re"], p["gamma_im"])) for p in items]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed pole file {path}: {exc}") from None


def write_poles(poles, path) -> None:
    write_json([{"k_re": k.real, "k_im": k.imag, "gamma_re": g.real, "gamma_im": g.imag}
                for k, g in poles], path)
