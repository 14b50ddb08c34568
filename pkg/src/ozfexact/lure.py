"""The lifted Lur'e loop: oscillation certificates, verification, simulation and gain bounds.

Loop equations, with G_d = G (x) I_d:

    e2 = G_d e1 + u2,    e1 - u1 in f(e2).

A certificate carries one period of e1 - u1 = w, e2 = z and of the residual
inputs u1, u2, together with the initial state that makes the plant response
periodic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ConstructionError, PlantError
from .lti import Signal, StateSpaceModel, kron_lift, periodic_initial_state, signal_power
from .margin import inv
from .polyhedral import PolyhedralConvexFunction, SlopeNonlinearity

ANCHOR_RADIUS = 1e-6


@dataclass(frozen=True)
class LoopCertificate:
    """One period of every loop signal; arrays are (N, d) with time along axis 0."""

    plant: StateSpaceModel
    kappa: float
    nonlinearity: SlopeNonlinearity
    w: np.ndarray
    z: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    xtil: np.ndarray
    ytil: np.ndarray
    ybar: np.ndarray
    xi0: np.ndarray
    t_star: float
    mu: np.ndarray = field(default_factory=lambda: np.zeros(0))
    xbar: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return self.w.shape[0]

    @property
    def d(self) -> int:
        return self.w.shape[1]

    @property
    def rho(self) -> float:
        return self.t_star / self.N

    @property
    def e1(self) -> np.ndarray:
        return self.w + self.u1

    def lifted_plant(self) -> StateSpaceModel:
        return kron_lift(self.plant, self.d)

    def to_dict(self) -> dict:
        F = self.nonlinearity.potential
        ybar = np.vstack([self.ybar, np.zeros((1, self.d))])
        xbar = None if self.xbar is None else np.vstack([self.xbar, np.zeros((1, self.d))])
        return {
            "N": self.N,
            "d": self.d,
            "t_star": self.t_star,
            "rho": self.rho,
            "mu": list(map(float, self.mu)),
            "ybar": ybar.tolist(),
            "xbar": None if xbar is None else xbar.tolist(),
            "pieces": F.to_dict(),
            "kappa": "inf" if math.isinf(self.kappa) else self.kappa,
            "xi0": self.xi0.tolist(),
            "plant": self.plant.to_dict(),
            "signals": {
                "w": self.w.tolist(),
                "z": self.z.tolist(),
                "u1": self.u1.tolist(),
                "u2": self.u2.tolist(),
                "xtil": self.xtil.tolist(),
                "ytil": self.ytil.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LoopCertificate":
        from .io import plant_from_dict

        kappa = math.inf if d["kappa"] in ("inf", None) else float(d["kappa"])
        sig = d["signals"]
        ybar = np.asarray(d["ybar"], dtype=float)[:-1]
        xbar = None if d.get("xbar") is None else np.asarray(d["xbar"], dtype=float)[:-1]
        return cls(
            plant=plant_from_dict(d["plant"]),
            kappa=kappa,
            nonlinearity=SlopeNonlinearity(PolyhedralConvexFunction.from_dict(d["pieces"]), kappa),
            w=np.asarray(sig["w"], dtype=float),
            z=np.asarray(sig["z"], dtype=float),
            u1=np.asarray(sig["u1"], dtype=float),
            u2=np.asarray(sig["u2"], dtype=float),
            xtil=np.asarray(sig["xtil"], dtype=float),
            ytil=np.asarray(sig["ytil"], dtype=float),
            ybar=ybar,
            xi0=np.asarray(d["xi0"], dtype=float),
            t_star=float(d["t_star"]),
            mu=np.asarray(d.get("mu", []), dtype=float),
            xbar=xbar,
        )


def _pow2(a: np.ndarray) -> float:
    return float(np.sum(a * a) / a.shape[0])


def assemble_certificate(destab, ss: StateSpaceModel, kappa: Optional[float] = None) -> LoopCertificate:
    """Loop signals from a :class:`~ozfexact.destabilizer.Destabilizer`.

    w = yhat - yhat_N, zhat = xhat - xhat_N, xtil = zhat - xbar, ytil = ybar - w;
    in the original coordinates z = zhat + w/kappa and u2 = xtil - ytil/kappa.
    """
    if kappa is None:
        kappa = destab.kappa
    data = destab.data
    N = data.N
    ybar = data.ybar[:, :N].T.copy()
    xbar = data.xbar[:, :N].T.copy()
    w = destab.what.T.copy()
    zhat = destab.zhat.T.copy()
    xtil = zhat - xbar
    ytil = ybar - w
    c = inv(kappa)
    z = zhat + c * w
    u2 = xtil - c * ytil
    t_star = destab.dual.t_star
    bound = 4 * t_star / N + 1e-8
    if _pow2(xtil) > bound:
        raise ConstructionError(f"construction fault: pow(xtil)^2 = {_pow2(xtil):.3g} exceeds 4 t*/N")
    if _pow2(ytil) > bound:
        raise ConstructionError(f"construction fault: pow(ytil)^2 = {_pow2(ytil):.3g} exceeds 4 t*/N")
    if abs(N * _pow2(ybar) - 1.0) > 1e-8:
        raise ConstructionError("construction fault: N pow(ybar)^2 differs from 1")
    lifted = kron_lift(ss, ybar.shape[1])
    xi0 = periodic_initial_state(lifted, Signal(ybar, period=N))
    return LoopCertificate(ss, float(kappa), destab.nonlinearity, w, z, ytil, u2, xtil, ytil, ybar, xi0,
                           t_star, np.asarray(destab.dual.mu), xbar)


@dataclass(frozen=True)
class VerificationReport:
    lti_residual: float
    state_return: float
    graph_gap: float
    pow_x: float
    pow_y: float
    norm_identity: float
    power_ok: bool
    trivial: bool

    @property
    def worst_residual(self) -> float:
        return max(self.lti_residual, self.state_return, self.graph_gap)

    @property
    def ok(self) -> bool:
        return self.worst_residual <= 1e-8 and self.power_ok and not self.trivial

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {
            "lti_residual": self.lti_residual,
            "state_return": self.state_return,
            "graph_gap": self.graph_gap,
            "pow_xtil_sq": self.pow_x,
            "pow_ytil_sq": self.pow_y,
            "norm_identity": self.norm_identity,
            "power_ok": self.power_ok,
            "trivial": self.trivial,
            "ok": self.ok,
        }


def verify_certificate(c: LoopCertificate, periods: int = 3) -> VerificationReport:
    """Independent re-check of the loop equations, graph membership and power bounds."""
    lifted = c.lifted_plant()
    N = c.N
    e1 = c.e1
    xi = c.xi0.copy()
    res = 0.0
    state_ret = 0.0
    for k in range(periods * N):
        j = k % N
        out = lifted.C @ xi + lifted.D @ e1[j] + c.u2[j]
        res = max(res, float(np.max(np.abs(out - c.z[j]))))
        xi = lifted.A @ xi + lifted.B @ e1[j]
        if j == N - 1:
            state_ret = max(state_ret, float(np.max(np.abs(xi - c.xi0), initial=0.0)))
    gap = max(abs(c.nonlinearity.membership_gap(c.z[j], c.w[j])) for j in range(N))
    px, py = _pow2(c.xtil), _pow2(c.ytil)
    bound = 4 * c.t_star / N + 1e-8
    norm = N * _pow2(c.ybar)
    power_ok = px <= bound and py <= bound and abs(norm - 1.0) <= 1e-8
    trivial = not np.any(c.w) and not np.any(c.ybar)
    return VerificationReport(res, state_ret, float(gap), px, py, norm, power_ok, trivial)


def simulate_lifted_loop(ss: StateSpaceModel, d: int, nl: SlopeNonlinearity, u1, u2, xi0=None,
                         steps: Optional[int] = None,
                         anchors: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                         max_iter: int = 100) -> Tuple[Signal, Signal]:
    """Step the loop e2 = G_d e1 + u2, e1 = f(e2) + u1.

    ``anchors`` = (z, w) arrays of certified pairs; when e2 falls within 1e-6
    of some z_k the certified value w_k is used in place of the least-norm
    selection.  A direct feedthrough is handled by damped fixed-point steps.
    """
    u1 = u1 if isinstance(u1, Signal) else Signal(np.asarray(u1, dtype=float))
    u2 = u2 if isinstance(u2, Signal) else Signal(np.asarray(u2, dtype=float))
    if steps is None:
        steps = min(u1.horizon if u1.period is None else 10 ** 9, u2.horizon if u2.period is None else 10 ** 9)
        if steps == 10 ** 9:
            raise ValueError("steps required for periodic inputs")
    U1 = u1.take(steps)
    U2 = u2.take(steps)
    lifted = kron_lift(ss, d)
    xi = np.zeros(lifted.n) if xi0 is None else np.asarray(xi0, dtype=float).copy()
    D = lifted.D
    direct = bool(np.any(D))

    def f(e):
        if anchors is not None:
            dist = np.max(np.abs(anchors[0] - e), axis=1)
            k = int(np.argmin(dist))
            if dist[k] <= ANCHOR_RADIUS:
                return anchors[1][k]
        return nl(e)

    E1 = np.empty((steps, d))
    E2 = np.empty((steps, d))
    for k in range(steps):
        base = lifted.C @ xi + U2[k]
        if not direct:
            e2 = base
            e1 = f(e2) + U1[k]
        else:
            e2 = base + D @ U1[k]
            theta = 0.5
            for _ in range(max_iter):
                e1 = f(e2) + U1[k]
                target = base + D @ e1
                if np.max(np.abs(target - e2)) <= 1e-12 * (1 + np.max(np.abs(e2))):
                    e2 = target
                    break
                e2 = (1 - theta) * e2 + theta * target
            else:
                raise PlantError(f"well-posedness failure at step {k}")
            e1 = f(e2) + U1[k]
        E1[k] = e1
        E2[k] = e2
        xi = lifted.A @ xi + lifted.B @ e1
    return Signal(E1), Signal(E2)


def simulate_certificate(c: LoopCertificate, periods: int = 10) -> Tuple[Signal, Signal, float]:
    """Re-run the loop with the certificate's inputs; returns (e1, e2, drift)."""
    steps = periods * c.N
    e1, e2 = simulate_lifted_loop(c.plant, c.d, c.nonlinearity, Signal(c.u1, c.N), Signal(c.u2, c.N),
                                  c.xi0, steps, anchors=(c.z, c.w))
    ref1 = np.tile(c.e1, (periods, 1))
    ref2 = np.tile(c.z, (periods, 1))
    drift = max(float(np.max(np.abs(e1.samples - ref1))), float(np.max(np.abs(e2.samples - ref2))))
    return e1, e2, drift


@dataclass(frozen=True)
class GainEstimate:
    pow_output: float
    pow_input: float
    lower_bound: float
    horizon: int
    horizon_input: float
    horizon_bound: float

    def to_dict(self) -> dict:
        def enc(v):
            return "inf" if math.isinf(v) else v

        return {
            "pow_out": self.pow_output,
            "pow_in": self.pow_input,
            "lower_bound": enc(self.lower_bound),
            "horizon": self.horizon,
            "pow_in_horizon": self.horizon_input,
            "lower_bound_horizon": enc(self.horizon_bound),
        }


def transient(c: LoopCertificate, horizon: int) -> np.ndarray:
    """Free response C A^k xi0 of the lifted plant, shape (horizon, d)."""
    lifted = c.lifted_plant()
    out = np.empty((horizon, c.d))
    xi = c.xi0.copy()
    for k in range(horizon):
        out[k] = lifted.C @ xi
        xi = lifted.A @ xi
    return out


def _ratio(a: float, b: float) -> float:
    return math.inf if b == 0.0 else a / b


def gain_lower_bound(c: LoopCertificate, horizon: Optional[int] = None) -> GainEstimate:
    """pow(e1) / pow(u) with u = (xtil, ytil).

    The transient from xi0 has zero power, so the bound itself uses the exact
    periodic powers; the finite-horizon estimate including the transient is
    reported alongside.
    """
    N = c.N
    if horizon is None:
        horizon = 200 * N
    if horizon % N:
        raise ValueError("horizon must be a multiple of the period")
    out = math.sqrt(_pow2(c.ybar))
    pin = math.sqrt(_pow2(c.xtil) + _pow2(c.ytil))
    reps = horizon // N
    xt = np.tile(c.xtil, (reps, 1)) + transient(c, horizon)
    hin = math.sqrt(signal_power(Signal(xt)) ** 2 + _pow2(c.ytil))
    return GainEstimate(out, pin, _ratio(out, pin), horizon, hin, _ratio(out, hin))
