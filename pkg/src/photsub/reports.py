"""Parameter sweeps as flat tables, plus the delimited writers the CLI uses."""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .cps import cps_detected, cps_fano_closed, thermal_setup
from .fock import thermal_cutoff, thermal_state
from .ips import ips_state

CPS_COLUMNS = ["n_th", "M_T", "M_R", "m_R", "p_R", "M_CPS", "F_CPS", "F_T", "eps"]
IPS_COLUMNS = ["n_th", "M_T", "M_R", "p_on", "M_IPS", "F_IPS", "F_T", "eps", "N_a", "N_b"]


def cps_rows_by_condition(big_mt: float, big_mr: float, m_r_values) -> list[dict]:
    """CPS statistics versus the conditioning value at fixed detected means."""
    state, tau = thermal_setup(big_mt, big_mr)
    rows = []
    for m in m_r_values:
        r = cps_detected(state, tau, 1.0, 1.0, m)
        rows.append({"n_th": big_mt + big_mr, "M_T": big_mt, "M_R": big_mr, **r.row(),
                     "F_T": 1.0 + big_mt})
    return rows


def cps_rows_by_energy(n_th_values, tau: float, eta_t: float, eta_r: float,
                       m_r_values=(2,)) -> list[dict]:
    """CPS statistics versus input energy for fixed conditioning values."""
    rows = []
    for n_th in n_th_values:
        state = thermal_state(n_th, thermal_cutoff(n_th, tol=1e-16) + 40)
        big_mt, big_mr = tau * eta_t * n_th, (1 - tau) * eta_r * n_th
        for m in m_r_values:
            r = cps_detected(state, tau, eta_r, eta_t, m)
            rows.append({"n_th": n_th, "M_T": big_mt, "M_R": big_mr, **r.row(),
                         "F_T": 1.0 + big_mt})
    return rows


def ips_rows(n_th_values, tau: float, eta_t: float, eta_r: float) -> list[dict]:
    rows = []
    for n_th in n_th_values:
        r = ips_state(n_th, tau, eta_r, eta_t)
        rows.append({"n_th": n_th, "M_T": r.m_a, "M_R": (1 - tau) * eta_r * n_th,
                     **r.row(), "F_T": 1.0 + r.m_a})
    return rows


def fano_closed_column(rows: list[dict]) -> np.ndarray:
    return np.array([cps_fano_closed(r["M_T"], r["M_R"]) for r in rows])


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def to_csv(rows: list[dict], columns: list[str], meta: dict) -> str:
    """Metadata comment line (JSON), header row, then one row per record."""
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def to_json(rows: list[dict], meta: dict) -> str:
    return json.dumps({"meta": meta, "rows": rows}, indent=2)


def read_csv(text: str) -> tuple[dict, list[dict]]:
    """Inverse of :func:`to_csv` (values come back as floats)."""
    lines = text.splitlines()
    meta = json.loads(lines[0][2:]) if lines and lines[0].startswith("# ") else {}
    body = [ln for ln in lines if not ln.startswith("#")]
    reader = csv.DictReader(body)
    return meta, [{k: float(v) for k, v in row.items()} for row in reader]
