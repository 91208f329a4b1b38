"""Transceiver distortion models.

Distortion is described by two scalar magnitude functions of the signal
magnitude (both in sqrt(mW)): eta at each transmit antenna and nu at each
receiver. Both must vanish at zero and be nondecreasing and convex; the
solvers additionally care whether they are linear (constant EVM) or
superlinear (saturation-type behaviour, x / eta(x) -> 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ImpairmentModel",
    "DistortionState",
    "eta_poly",
    "nu_linear",
    "tx_distortion_cov",
    "evm_tx",
    "rx_distortion_var",
    "distortion_state",
]


def _check_nonnegative(x):
    if np.any(np.asarray(x) < 0):
        raise ValueError("signal magnitudes must be nonnegative")


def eta_poly(x, kappa1: float, kappa2: float):
    """Transmit distortion magnitude (kappa1/100) * x * (1 + (x/kappa2)^4).

    kappa1 is the small-signal EVM in percent; kappa2 (sqrt(mW)) sets where
    the quintic term kicks in. kappa2 = inf is first-class and gives the
    exactly linear constant-EVM model, with no infinities leaking through.
    """
    if kappa1 < 0:
        raise ValueError("kappa1 must be nonnegative")
    if not kappa2 > 0:
        raise ValueError("kappa2 must be positive (inf allowed)")
    arr = np.asarray(x, dtype=float)
    _check_nonnegative(arr)
    base = (kappa1 / 100.0) * arr
    if not math.isinf(kappa2):
        base = base * (1.0 + (arr / kappa2) ** 4)
    if np.ndim(x) == 0:
        return float(base)
    return base


def nu_linear(x, kappa3: float):
    """Receiver distortion magnitude (kappa3/100) * x."""
    if kappa3 < 0:
        raise ValueError("kappa3 must be nonnegative")
    arr = np.asarray(x, dtype=float)
    _check_nonnegative(arr)
    out = (kappa3 / 100.0) * arr
    if np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ImpairmentModel:
    """A pair of distortion magnitude functions (transmit eta, receive nu).

    The built-in forms are eta_poly(x, kappa1, kappa2) and
    nu_linear(x, kappa3); the sensible operating range for kappa1/kappa3 is
    0..15 percent. Custom functions can be supplied as (value, derivative)
    pairs; they must satisfy f(0) = 0, be nondecreasing and convex, and
    declare via the *_superlinear flags whether x / f(x) -> 0. validate()
    spot-checks those promises on a sample grid.
    """

    kappa1: float = 0.0
    kappa2: float = math.inf
    kappa3: float = 0.0
    custom_eta: Optional[tuple] = None
    custom_nu: Optional[tuple] = None
    custom_eta_superlinear: bool = False
    custom_nu_superlinear: bool = False

    def __post_init__(self):
        if self.kappa1 < 0 or self.kappa3 < 0:
            raise ValueError("kappa1 and kappa3 must be nonnegative")
        if not self.kappa2 > 0:
            raise ValueError("kappa2 must be positive (inf allowed)")
        for pair in (self.custom_eta, self.custom_nu):
            if pair is not None and len(pair) != 2:
                raise ValueError("custom functions must be (value, derivative) pairs")

    @classmethod
    def ideal(cls) -> "ImpairmentModel":
        return cls(0.0, math.inf, 0.0)

    # -- transmit side -----------------------------------------------------

    def eta(self, x):
        if self.custom_eta is not None:
            return self.custom_eta[0](x)
        return eta_poly(x, self.kappa1, self.kappa2)

    def eta_deriv(self, x):
        if self.custom_eta is not None:
            return self.custom_eta[1](x)
        arr = np.asarray(x, dtype=float)
        out = np.full_like(arr, self.kappa1 / 100.0)
        if not math.isinf(self.kappa2):
            out = out * (1.0 + 5.0 * (arr / self.kappa2) ** 4)
        if np.ndim(x) == 0:
            return float(out)
        return out

    @property
    def eta_is_zero(self) -> bool:
        return self.custom_eta is None and self.kappa1 == 0.0

    @property
    def eta_is_linear(self) -> bool:
        return self.custom_eta is None and (math.isinf(self.kappa2) or self.kappa1 == 0.0)

    @property
    def eta_slope(self) -> float:
        if not self.eta_is_linear:
            raise ValueError("eta is not linear")
        return self.kappa1 / 100.0

    @property
    def eta_is_superlinear(self) -> bool:
        if self.custom_eta is not None:
            return self.custom_eta_superlinear
        return self.kappa1 > 0.0 and not math.isinf(self.kappa2)

    # -- receive side ------------------------------------------------------

    def nu(self, x):
        if self.custom_nu is not None:
            return self.custom_nu[0](x)
        return nu_linear(x, self.kappa3)

    def nu_deriv(self, x):
        if self.custom_nu is not None:
            return self.custom_nu[1](x)
        out = np.full_like(np.asarray(x, dtype=float), self.kappa3 / 100.0)
        if np.ndim(x) == 0:
            return float(out)
        return out

    @property
    def nu_is_zero(self) -> bool:
        return self.custom_nu is None and self.kappa3 == 0.0

    @property
    def nu_is_linear(self) -> bool:
        return self.custom_nu is None

    @property
    def nu_slope(self) -> float:
        if not self.nu_is_linear:
            raise ValueError("nu is not linear")
        return self.kappa3 / 100.0

    @property
    def nu_is_superlinear(self) -> bool:
        if self.custom_nu is not None:
            return self.custom_nu_superlinear
        return False

    @property
    def is_ideal(self) -> bool:
        return self.eta_is_zero and self.nu_is_zero

    # -- utilities ---------------------------------------------------------

    def rescale_args(self, eta_arg_scale: float, nu_arg_scale: float) -> "ImpairmentModel":
        """Model in rescaled signal units: eta'(y) = eta(a*y)/a, same for nu.

        Used by the solvers, which normalize powers internally. For the
        built-in forms this just divides kappa2 by the transmit scale (the
        linear slopes are scale free).
        """
        if eta_arg_scale <= 0 or nu_arg_scale <= 0:
            raise ValueError("argument scales must be positive")
        kappa2 = self.kappa2 if math.isinf(self.kappa2) else self.kappa2 / eta_arg_scale

        def wrap(pair, a):
            if pair is None:
                return None
            value, deriv = pair
            return (lambda y: value(a * y) / a, lambda y: deriv(a * y))

        return ImpairmentModel(
            kappa1=self.kappa1,
            kappa2=kappa2,
            kappa3=self.kappa3,
            custom_eta=wrap(self.custom_eta, eta_arg_scale),
            custom_nu=wrap(self.custom_nu, nu_arg_scale),
            custom_eta_superlinear=self.custom_eta_superlinear,
            custom_nu_superlinear=self.custom_nu_superlinear,
        )

    def validate(self, x_max: float = 100.0, n_points: int = 201, tol: float = 1e-6):
        """Spot-check f(0) = 0, monotonicity, convexity and derivative consistency."""
        xs = np.linspace(0.0, x_max, n_points)
        for label, f, df in (("eta", self.eta, self.eta_deriv), ("nu", self.nu, self.nu_deriv)):
            vals = np.asarray([f(float(x)) for x in xs], dtype=float)
            if abs(vals[0]) > tol:
                raise ValueError(f"{label}(0) must be 0, got {vals[0]:.3e}")
            scale = max(1.0, float(np.abs(vals).max()))
            if np.any(np.diff(vals) < -tol * scale):
                raise ValueError(f"{label} must be nondecreasing")
            second = vals[:-2] - 2.0 * vals[1:-1] + vals[2:]
            if np.any(second < -tol * scale):
                raise ValueError(f"{label} must be convex")
            h = xs[1] - xs[0]
            mids = np.asarray([df(float(x)) for x in xs[1:-1]], dtype=float)
            central = (vals[2:] - vals[:-2]) / (2.0 * h)
            err = np.abs(mids - central)
            if np.any(err > 1e-3 * (1.0 + np.abs(central)) * max(1.0, scale / x_max)):
                raise ValueError(f"{label} derivative is inconsistent with its values")


# -- distortion statistics induced by a set of beamformers ------------------


def _row_norms(W: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.atleast_2d(W), axis=1)


def tx_distortion_cov(W: np.ndarray, model: ImpairmentModel) -> np.ndarray:
    """Per-antenna distortion powers c_n^2 = eta(||row n of W||)^2 for one cell."""
    norms = _row_norms(np.asarray(W, dtype=complex))
    return np.asarray(model.eta(norms), dtype=float) ** 2


def evm_tx(W: np.ndarray, antenna: int, model: ImpairmentModel) -> float:
    """Squared error-vector magnitude at one antenna: (eta(x)/x)^2, x the row norm."""
    norms = _row_norms(np.asarray(W, dtype=complex))
    x = float(norms[antenna])
    if x == 0.0:
        raise ValueError("EVM is undefined for an antenna that transmits nothing")
    return float(model.eta(x)) ** 2 / x**2


def _received_magnitude(scenario, Ws, i: int, j: int) -> float:
    # sqrt of total received signal power at user (i, j) across all arrays
    total = 0.0
    for m in range(scenario.n_cells):
        v = scenario.channel(m, i, j).conj() @ Ws[m]
        total += float(np.sum(np.abs(v) ** 2))
    return math.sqrt(total)


def rx_distortion_var(scenario, Ws, i: int, j: int, model: ImpairmentModel) -> float:
    """Effective noise-plus-self-distortion variance at user (i, j).

    noise_power + nu(sqrt(sum_m ||h_{m,i,j}^H W_m||^2))^2, in mW.
    """
    mag = _received_magnitude(scenario, Ws, i, j)
    return scenario.noise_power + float(model.nu(mag)) ** 2


@dataclass(frozen=True)
class DistortionState:
    """Distortion statistics induced by beamformers under a model.

    tx_cov_diag[i] holds the per-antenna distortion powers of cell i (mW);
    rx_var[i, j] the effective noise variance at user (i, j) (>= noise floor).
    """

    tx_cov_diag: np.ndarray
    rx_var: np.ndarray


def distortion_state(scenario, Ws, model: ImpairmentModel) -> DistortionState:
    n, k = scenario.n_cells, scenario.users_per_cell
    tx = np.zeros((n, scenario.n_tx))
    rx = np.zeros((n, k))
    for i in range(n):
        tx[i] = tx_distortion_cov(Ws[i], model)
        for j in range(k):
            rx[i, j] = rx_distortion_var(scenario, Ws, i, j, model)
    return DistortionState(tx_cov_diag=tx, rx_var=rx)
