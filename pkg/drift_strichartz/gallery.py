"""
Built-in fixtures: the worked examples of the theory, each bundled with its
known ground truth (ranks, homogeneous dimension, regime, large-time
exponent and closed-form Gramians where one exists).
"""

import logging
import math
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from drift_strichartz.core.gramian import OperatorSpec
from drift_strichartz.core.linalg import cholesky_logdet
from drift_strichartz.errors import DriftStrichartzError, RegistryError

logger = logging.getLogger(__name__)


class Fixture(BaseModel):
    """An operator specification with whatever ground truth is known for it."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    params: Dict[str, float] = {}
    spec: OperatorSpec
    description: str = ""
    ranks: Optional[List[int]] = None
    D: Optional[int] = None
    case_tag: Optional[str] = None
    D_infty: Optional[float] = None
    D_infty_tol: float = 0.3
    volume_formula: Optional[str] = None
    volume_fn: Optional[Callable[[float], float]] = None
    volume_tol: float = 1e-8
    gramian_fn: Optional[Callable[[float], np.ndarray]] = None
    gramian_tol: float = 1e-10
    Q_infty: Optional[np.ndarray] = None
    asymptote: Optional[Tuple[float, float]] = None

    def expected(self) -> Dict[str, Any]:
        """The ground truth as plain data (the `expected` block of a problem file)."""
        block: Dict[str, Any] = {}
        if self.ranks is not None:
            block["ranks"] = list(self.ranks)
        if self.D is not None:
            block["D"] = self.D
        if self.case_tag is not None:
            block["case_tag"] = self.case_tag
        if self.D_infty is not None:
            block["D_infty"] = self.D_infty
        if self.volume_formula is not None:
            block["closed_form_V"] = self.volume_formula
        if self.Q_infty is not None:
            block["Q_infty"] = self.Q_infty.ravel().tolist()
        return block


def _label(name: str, params: Dict[str, float]) -> str:
    if not params:
        return name
    parts = [f"{k}{int(v) if float(v).is_integer() else v}" for k, v in params.items()]
    return f"{name}-" + "-".join(parts)


def _int_param(params: Dict[str, Any], key: str, lo: int, hi: int, default: Optional[int] = None) -> int:
    value = params.get(key, default)
    if value is None:
        raise RegistryError(f"missing parameter '{key}'")
    if float(value) != int(value) or not lo <= int(value) <= hi:
        raise RegistryError(f"parameter '{key}' must be an integer in [{lo}, {hi}], got {value}")
    return int(value)


def shift_matrix(n: int) -> np.ndarray:
    """Lower shift: B[i+1, i] = 1."""
    return np.eye(n, k=-1)


def leading_identity(n: int, k: int) -> np.ndarray:
    Q = np.zeros((n, n))
    Q[:k, :k] = np.eye(k)
    return Q


def kolmogorov_gramian(t: float, m: int = 1) -> np.ndarray:
    """[[t I, t^2/2 I], [t^2/2 I, t^3/3 I]]."""
    I = np.eye(m)
    return np.block([[t * I, t ** 2 / 2 * I], [t ** 2 / 2 * I, t ** 3 / 3 * I]])


def fan_gramian(t: float, n: int, k: int) -> np.ndarray:
    """
    Gramian of Q = diag(I_k, 0) with the lower shift drift.

    Each unit direction e_r, r < k, feeds the chain e_r -> e_{r+1} -> ... -> e_n and
    contributes the block t^{i+j-1}/((i+j-1)(i-1)!(j-1)!) on coordinates r..n.
    """
    G = np.zeros((n, n))
    for r in range(k):
        size = n - r
        i = np.arange(1, size + 1)[:, None]
        j = np.arange(1, size + 1)[None, :]
        fact_i = np.array([math.factorial(v - 1) for v in range(1, size + 1)], dtype=float)
        block = t ** (i + j - 1) / ((i + j - 1) * fact_i[:, None] * fact_i[None, :])
        G[r:, r:] += block
    return G


def imspec_gramian(t: float, a: float, b: float, c: float) -> np.ndarray:
    B = np.array([[a, b], [c, -a]])
    Q = np.diag([1.0, 0.0])
    g = math.sqrt(-b * c - a * a)
    s2 = math.sin(2 * g * t)
    return ((t / 2 + s2 / (4 * g)) * Q
            + (1 - math.cos(2 * g * t)) / (4 * g * g) * (B @ Q + Q @ B.T)
            + (t / 2 - s2 / (4 * g)) / (g * g) * (B @ Q @ B.T))


def _ex_1_1(params: Dict[str, Any]) -> Fixture:
    Q = np.diag([1.0, 1.0, 0.0])
    B = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    def gramian(t: float) -> np.ndarray:
        G = np.zeros((3, 3))
        G[0, 0] = math.expm1(2 * t) / 2
        G[1:, 1:] = kolmogorov_gramian(t)
        return G

    return Fixture(
        name="ex-1.1", spec=OperatorSpec(Q=Q, B=B, label="ex-1.1"),
        description="u_t = i(u_xx + u_yy) + x u_x + y u_z",
        ranks=[2, 1], D=5, case_tag="Thm1.3-i",
        volume_formula="(e^{2t}-1)/2 * t^4/12",
        volume_fn=lambda t: math.expm1(2 * t) / 2 * t ** 4 / 12,
        gramian_fn=gramian,
    )


def _conformal(params: Dict[str, Any]) -> Fixture:
    n = _int_param(params, "n", 1, 3, 1)
    return Fixture(
        name="conformal", params={"n": n},
        spec=OperatorSpec(Q=np.eye(n), B=-np.eye(n), label=_label("conformal", {"n": n})),
        description="Q = I, B = -I: the Schroedinger equation in conformal coordinates",
        ranks=[n], D=n, case_tag="Thm1.3-i",
        volume_formula="((1-e^{-2t})/2)^n",
        volume_fn=lambda t: (-math.expm1(-2 * t) / 2) ** n,
        gramian_fn=lambda t: -math.expm1(-2 * t) / 2 * np.eye(n),
        Q_infty=np.eye(n) / 2,
    )


def _free(params: Dict[str, Any]) -> Fixture:
    n = _int_param(params, "n", 1, 3, 1)
    return Fixture(
        name="free", params={"n": n},
        spec=OperatorSpec(Q=np.eye(n), B=np.zeros((n, n)), label=f"free-{n}d"),
        description="free Schroedinger equation u_t = i Lap u",
        ranks=[n], D=n, case_tag="Thm1.3-ii",
        volume_formula="t^n",
        volume_fn=lambda t: t ** n,
        gramian_fn=lambda t: t * np.eye(n),
    )


def _kolmogorov(params: Dict[str, Any]) -> Fixture:
    m = _int_param(params, "m", 1, 2, 1)
    n = 2 * m
    B = np.zeros((n, n))
    B[m:, :m] = np.eye(m)
    return Fixture(
        name="kolmogorov", params={"m": m},
        spec=OperatorSpec(Q=leading_identity(n, m), B=B, label=f"kolmogorov-m{m}"),
        description="u_t = i Lap_x u + <x, grad_y u>, x, y in R^m",
        ranks=[m, m], D=4 * m, case_tag="Thm1.3-iii",
        volume_formula="(t^4/12)^m",
        volume_fn=lambda t: (t ** 4 / 12) ** m,
        volume_tol=1e-10,
        gramian_fn=lambda t: kolmogorov_gramian(t, m),
    )


def _fan(params: Dict[str, Any], name: str = "fan") -> Fixture:
    n = _int_param(params, "n", 2, 4)
    k = _int_param(params, "k", 1, n, 1)
    D = n + (n - k + 1) * (n - k)
    V1 = math.exp(cholesky_logdet(fan_gramian(1.0, n, 1)))
    if k == n:
        case, D_inf = "Thm1.3-ii", None
    elif k == 1:
        case, D_inf = "Thm1.3-iii", None
    else:
        case, D_inf = "anomalous-A", float(n * n)
    label = _label(name, {"n": n, "k": k}) if name == "fan" else f"{name}-{n}"
    return Fixture(
        name=name, params={"n": n, "k": k} if name == "fan" else {"n": n},
        spec=OperatorSpec(Q=leading_identity(n, k), B=shift_matrix(n), label=label),
        description=f"Q = diag(I_{k}, 0) with the lower shift drift",
        ranks=[k] + [1] * (n - k), D=D, case_tag=case, D_infty=D_inf, D_infty_tol=0.25,
        volume_formula="det of sum_r [t^{i+j-1}/((i+j-1)(i-1)!(j-1)!)]",
        volume_fn=lambda t: math.exp(cholesky_logdet(fan_gramian(t, n, k))),
        gramian_fn=lambda t: fan_gramian(t, n, k),
        asymptote=(V1, float(n * n)) if k < n else None,
    )


def _dym(params: Dict[str, Any]) -> Fixture:
    n = _int_param(params, "n", 2, 3, 2)
    return _fan({"n": n, "k": 1}, name="dym")


def _imspec(params: Dict[str, Any]) -> Fixture:
    a = float(params.get("a", 0.0))
    b = float(params.get("b", -1.0))
    c = float(params.get("c", 1.0))
    gamma_sq = -b * c - a * a
    if c == 0 or gamma_sq <= 0:
        raise RegistryError(f"imspec needs c != 0 and -bc - a^2 > 0, got a={a}, b={b}, c={c}")
    default = (a, b, c) == (0.0, -1.0, 1.0)
    return Fixture(
        name="imspec", params={"a": a, "b": b, "c": c},
        spec=OperatorSpec(Q=np.diag([1.0, 0.0]), B=np.array([[a, b], [c, -a]]),
                          label="rotation-7.2" if default else _label("imspec", {"a": a, "b": b, "c": c})),
        description="2x2 drift with spectrum {+-i gamma}, gamma^2 = -bc - a^2",
        ranks=[1, 1], D=4, case_tag="Thm1.4", D_infty=2.0, D_infty_tol=0.1,
        volume_formula="(t^2 - sin^2 t)/4" if default else "det Q(t), closed-form Q(t)",
        volume_fn=lambda t: float(np.linalg.det(imspec_gramian(t, a, b, c))),
        gramian_fn=lambda t: imspec_gramian(t, a, b, c),
    )


def _anomalous_7_4(params: Dict[str, Any]) -> Fixture:
    k = _int_param(params, "k", 2, 3, 2)
    B = np.array([[0.0, 0.0, 0.0, 0.0],
                  [0.0, 0.0, 0.0, -1.0],
                  [1.0, 0.0, 0.0, 0.0],
                  [0.0, 1.0, 0.0, 0.0]])
    if k == 2:
        formula = "t^4/96 (2t^2 + cos 2t - 1)"
        volume = lambda t: t ** 4 / 96 * (2 * t ** 2 + math.cos(2 * t) - 1)
        ranks, case = [2, 2], "anomalous-B"
    else:
        formula = "t^2/96 (12 + t^2)(2t^2 + cos 2t - 1)"
        volume = lambda t: t ** 2 / 96 * (12 + t ** 2) * (2 * t ** 2 + math.cos(2 * t) - 1)
        ranks, case = [3, 1], "anomalous-A"
    return Fixture(
        name="anomalous-7.4", params={"k": k},
        spec=OperatorSpec(Q=leading_identity(4, k), B=B, label=f"anomalous-7.4-k{k}"),
        description="nilpotent-plus-rotation drift that is neither skew-similar nor principal",
        ranks=ranks, D=8 if k == 2 else 6, case_tag=case, D_infty=6.0, D_infty_tol=0.3,
        volume_formula=formula, volume_fn=volume,
    )


def _smoluchowski_kramers(params: Dict[str, Any]) -> Fixture:
    return Fixture(
        name="smoluchowski-kramers",
        spec=OperatorSpec(Q=np.diag([1.0, 0.0]), B=np.array([[-2.0, -2.0], [1.0, 0.0]]),
                          label="smoluchowski-kramers"),
        description="damped oscillator drift with spectrum -1 +- i",
        ranks=[1, 1], D=4, case_tag="Thm1.3-i",
        Q_infty=np.diag([0.25, 0.125]),
    )


def _fan_tilt(params: Dict[str, Any]) -> Fixture:
    n = _int_param(params, "n", 2, 4, 2)
    sign = _int_param(params, "sign", -1, 1, 1)
    if sign == 0:
        raise RegistryError("parameter 'sign' must be +1 or -1")
    B = shift_matrix(n)
    B[0, 0] = 2.0 * sign
    return Fixture(
        name="fan-tilt", params={"n": n, "sign": sign},
        spec=OperatorSpec(Q=leading_identity(n, 1), B=B,
                          label=f"fan-tilt-n{n}-{'plus' if sign > 0 else 'minus'}"),
        description="lower shift chain with a growing or decaying first coordinate",
        ranks=[1] * n, D=n * n, case_tag="Thm1.3-i",
    )


_REGISTRY: Dict[str, Tuple[Callable[[Dict[str, Any]], Fixture], str]] = {
    "ex-1.1": (_ex_1_1, ""),
    "conformal": (_conformal, "n in [1, 3] (default 1)"),
    "free": (_free, "n in [1, 3] (default 1)"),
    "kolmogorov": (_kolmogorov, "m in [1, 2] (default 1)"),
    "fan": (_fan, "n in [2, 4], k in [1, n] (default 1)"),
    "dym": (_dym, "n in [2, 3] (default 2)"),
    "imspec": (_imspec, "a, b, c real with c != 0 and -bc - a^2 > 0 (default 0, -1, 1)"),
    "anomalous-7.4": (_anomalous_7_4, "k in [2, 3] (default 2)"),
    "smoluchowski-kramers": (_smoluchowski_kramers, ""),
    "fan-tilt": (_fan_tilt, "n in [2, 4] (default 2), sign in {-1, +1} (default +1)"),
}

_ALIASES: Dict[str, Tuple[str, Dict[str, Any]]] = {
    "free-1d": ("free", {"n": 1}),
    "free-2d": ("free", {"n": 2}),
    "free-3d": ("free", {"n": 3}),
    "kolmogorov-m1": ("kolmogorov", {"m": 1}),
    "kolmogorov-m2": ("kolmogorov", {"m": 2}),
    "dym-2": ("dym", {"n": 2}),
    "dym-3": ("dym", {"n": 3}),
    "rotation-7.2": ("imspec", {}),
    "conformal-2.1": ("conformal", {"n": 1}),
}


def fixture(name: str, **params: Any) -> Fixture:
    """
    Build a named fixture.

    Args:
        name: Registry name or alias
        **params: Family parameters; alias defaults are overridden by explicit values

    Returns:
        Fixture
    """
    if name in _ALIASES:
        base, defaults = _ALIASES[name]
        params = {**defaults, **params}
        name = base
    if name not in _REGISTRY:
        known = sorted(list(_REGISTRY) + list(_ALIASES))
        raise RegistryError(f"unknown fixture '{name}'; known fixtures: {', '.join(known)}")
    builder, _ = _REGISTRY[name]
    try:
        return builder(params)
    except RegistryError:
        raise
    except DriftStrichartzError as e:
        raise RegistryError(f"fixture '{name}' with {params} is invalid: {str(e)}")


def list_fixtures() -> List[Dict[str, str]]:
    """Registry names and aliases with their parameter ranges."""
    entries = [{"name": name, "params": doc} for name, (_, doc) in _REGISTRY.items()]
    for alias, (base, params) in _ALIASES.items():
        entries.append({"name": alias, "params": f"alias of {base} {params}".rstrip()})
    return entries


def all_fixtures() -> List[Fixture]:
    """One instance of every family member the test suite enforces."""
    built = [fixture("ex-1.1"), fixture("smoluchowski-kramers"), fixture("rotation-7.2")]
    built += [fixture("conformal", n=n) for n in (1, 2)]
    built += [fixture("free", n=n) for n in (1, 2, 3)]
    built += [fixture("kolmogorov", m=m) for m in (1, 2)]
    built += [fixture("fan", n=n, k=k) for n in range(2, 5) for k in range(1, n + 1)]
    built += [fixture("dym", n=n) for n in (2, 3)]
    built += [fixture("anomalous-7.4", k=k) for k in (2, 3)]
    built += [fixture("fan-tilt", n=2, sign=s) for s in (1, -1)]
    return built


def export_fixture(name: str, **params: Any) -> Dict[str, Any]:
    """The fixture as a problem-file document."""
    fx = fixture(name, **params)
    document = fx.spec.to_problem()
    document["expected"] = fx.expected()
    return document
