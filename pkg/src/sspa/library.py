"""Bundled model files and a generator for the cell/energy/trigger model."""

from __future__ import annotations

from importlib import resources
from typing import Dict, Optional, Sequence

from .syntax import Model, desugar, parse_model

# checking mode each bundled file is documented to pass in
BUNDLED_MODES: Dict[str, str] = {
    "biological": "strict",
    "biological_text": "lenient",
    "spoiled": "strict",
    "alternating": "lenient",
    "nonassoc": "lenient",
    "independent": "strict",
}


def bundled_names():
    return sorted(BUNDLED_MODES)


def bundled_path(name: str):
    return resources.files("sspa") / "models" / f"{name}.sspa"


def bundled_source(name: str) -> str:
    return bundled_path(name).read_text(encoding="utf-8")


def load(name: str) -> Model:
    """Parse and desugar a bundled model."""
    return desugar(parse_model(bundled_source(name)))


def biological_source(lam: float = 1.0, delta: float = 2.0, nu: float = 1.0,
                      gammas: Sequence[float] = (0.5, 0.5, 0.5),
                      kappa_c: Optional[float] = None, energy_loop: Optional[float] = None,
                      trigger: str = "figure") -> str:
    """Model text of the cell system with ``N = len(gammas)`` growth stages.

    ``kappa_c`` is the rate of the cell's c self-loops and ``energy_loop`` the
    rate of the (a, .) self-loop on E0; both default to ``delta``, which is the
    choice that makes the reversed rates constant.  ``energy_loop=0`` drops the
    self-loop.  ``trigger`` is ``"figure"`` (self-loop on T1) or ``"text"``
    (second passive branch on T0).
    """
    lam, delta, nu = float(lam), float(delta), float(nu)
    gammas = [float(g) for g in gammas]
    kappa_c = delta if kappa_c is None else float(kappa_c)
    energy_loop = delta if energy_loop is None else float(energy_loop)
    n = len(gammas)
    lines = [f"let lambda = {lam!r};", f"let delta = {delta!r};", f"let nu = {nu!r};",
             f"let kappa_c = {kappa_c!r};"]
    lines += [f"let gamma{i} = {g!r};" for i, g in enumerate(gammas, 1)]
    if energy_loop:
        lines.append(f"let eloop = {energy_loop!r};")
        lines.append("E0 = (a,lambda).E1 + (a,eloop).E0;")
    else:
        lines.append("E0 = (a,lambda).E1;")
    lines.append("E1 = (d,delta).E0;")
    lines.append("C0 = (a,?).C1;")
    for i in range(1, n + 1):
        nxt = f"C{min(i + 1, n)}"
        lines.append(f"C{i} = (a,?).{nxt} + (c,gamma{i}).C0 + (c,kappa_c).C{i};")
    if trigger == "figure":
        lines += ["T0 = (c,?).T1;", "T1 = (e,nu).T0 + (c,?).T1;"]
    elif trigger == "text":
        lines += ["T0 = (c,?).T1 + (c,?).T0;", "T1 = (e,nu).T0;"]
    else:
        raise ValueError(f"unknown trigger variant {trigger!r}")
    lines.append("system Cell = coop {a,c} (E0, C0, T0);")
    return "\n".join(lines) + "\n"
