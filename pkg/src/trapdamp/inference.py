"""Fits to instrument-style data and the c_tuning design scan."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares, minimize

from .circuit import (
    CircuitParams,
    HemtModel,
    ImpedanceTrace,
    ResonanceSummary,
    characterize_resonance,
    switch_characteristics,
)
from .errors import FitError, InvalidParameterError, SingularityError
from .lorentzian import fit_peak
from .spectra import Spectrum

N_HEMT_PARAMS = 3
SIMPLEX_XTOL = 1e-6


@dataclass(frozen=True)
class SwitchMeasurement:
    """One point of the (c_tuning, off-state R, suppression) data set."""

    c_tuning: float
    r_off_state: float
    eta: float
    sigma_r: float | None = None
    sigma_eta: float | None = None

    def __post_init__(self):
        if not self.c_tuning > 0:
            raise InvalidParameterError(f"c_tuning must be > 0, got {self.c_tuning}")
        if not self.r_off_state > 0:
            raise InvalidParameterError(f"r_off_state must be > 0, got {self.r_off_state}")
        if not self.eta > 0:
            raise InvalidParameterError(f"eta must be > 0, got {self.eta}")

    @property
    def suspicious(self) -> bool:
        """Switching on should not raise the damping: eta < 1 is flagged."""
        return self.eta < 1.0


@dataclass(frozen=True)
class FitResult:
    hemt: HemtModel
    residual: float
    iterations: int
    converged: bool
    r_loss: float | None = None

    def __post_init__(self):
        if not self.residual >= 0:
            raise InvalidParameterError("residual must be >= 0")

    def to_json(self) -> dict:
        out = {
            "r_off_ohm": self.hemt.r_off,
            "r_on_ohm": self.hemt.r_on,
            "c_ds_f": self.hemt.c_ds,
            "residual": self.residual,
            "converged": self.converged,
        }
        if self.r_loss is not None:
            out["r_loss_ohm"] = self.r_loss
        return out


@dataclass(frozen=True)
class DesignConstraints:
    """Targets for the switch design.

    ``saturation_fraction`` additionally asks for eta within that fraction of
    the best eta on the scanned grid; set it to 0 to use the two thresholds
    alone.
    """

    r_min: float = 60e3
    eta_min: float = 100.0
    saturation_fraction: float = 0.8

    def __post_init__(self):
        if not (self.r_min > 0 and self.eta_min > 0):
            raise InvalidParameterError("r_min and eta_min must be > 0")
        if not 0 <= self.saturation_fraction <= 1:
            raise InvalidParameterError("saturation_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class ScanResult:
    c_tuning: np.ndarray
    r_off_state: np.ndarray
    eta: np.ndarray
    meets: np.ndarray
    recommended: float | None
    satisfiable: bool
    pareto_best: float


def fit_lorentzian(data: ImpedanceTrace | Spectrum) -> ResonanceSummary:
    """Lorentzian fit of a single resonance in Re[Z] or in a power spectrum."""
    if isinstance(data, ImpedanceTrace):
        return characterize_resonance(data)
    if isinstance(data, Spectrum):
        fit = fit_peak(data.freq, data.value)
        if not fit.converged:
            raise FitError("Lorentzian fit did not converge", best=fit, residual=fit.residual)
        return ResonanceSummary(fit.f0, fit.q, fit.amplitude, fit.amplitude, fit.residual, True)
    raise InvalidParameterError(f"cannot fit a {type(data).__name__}")


def _arrays(data: Sequence[SwitchMeasurement]):
    ct = np.array([d.c_tuning for d in data], dtype=float)
    r = np.array([d.r_off_state for d in data], dtype=float)
    eta = np.array([d.eta for d in data], dtype=float)
    return ct, r, eta


class _HemtObjective:
    """Log-space residuals of the switch model against measured (R, eta)."""

    def __init__(self, data, fixed: CircuitParams, f_z, free_r_loss):
        self.ct, r, eta = _arrays(data)
        self.log_data = np.concatenate([np.log(r), np.log(eta)])
        self.fixed = fixed
        self.f_z = f_z
        self.free_r_loss = free_r_loss

    def build(self, x):
        r_off, r_on, c_ds = (float(v) for v in np.exp(x[:3]))
        if not r_off >= r_on:
            return None
        params = replace(self.fixed, hemt=HemtModel(r_off, r_on, c_ds))
        if self.free_r_loss:
            params = replace(params, r_loss=float(np.exp(x[3])))
        return params

    def residuals(self, x):
        params = self.build(x) if np.all(np.isfinite(x)) else None
        if params is None:
            return np.full(self.log_data.size, 1e3)
        try:
            _, r_model, eta_model = switch_characteristics(params, self.ct, self.f_z)
        except SingularityError:
            return np.full(self.log_data.size, 1e3)
        with np.errstate(divide="ignore"):
            model = np.concatenate([np.log(r_model), np.log(eta_model)])
        res = model - self.log_data
        return np.where(np.isfinite(res), res, 1e3)

    def cost(self, x):
        res = self.residuals(x)
        return float(res @ res)


def fit_hemt_model(
    data: Sequence[SwitchMeasurement],
    fixed: CircuitParams,
    f_z: float | None = None,
    n_restarts: int = 3,
    seed: int = 0,
    initial: HemtModel | None = None,
    free_r_loss: bool = False,
    max_iterations: int = 2000,
) -> FitResult:
    """Fit (r_off, r_on, c_ds) to measured off-state R and suppression.

    Minimizes the summed squared log residuals of R and eta. A simplex search
    runs from the start point and from ``n_restarts`` perturbed copies; the
    best (lowest cost, then lowest start index) is polished by damped least
    squares. ``f_z=None`` evaluates each configuration at its own off-state
    resonance. ``free_r_loss`` adds the tank loss as a fourth parameter.
    The reported residual is the root-mean-square log residual, i.e. the
    RMS relative error.
    """
    data = list(data)
    n_par = N_HEMT_PARAMS + (1 if free_r_loss else 0)
    if len(data) < n_par:
        raise InvalidParameterError(
            f"underdetermined: {len(data)} points for {n_par} parameters"
        )
    ct = np.array([d.c_tuning for d in data])
    if ct.max() / ct.min() < 10:
        warnings.warn("c_tuning data span less than a decade; fit may be poorly constrained", stacklevel=2)
    if any(d.suspicious for d in data):
        warnings.warn("data contain eta < 1", stacklevel=2)
    obj = _HemtObjective(data, fixed, f_z, free_r_loss)

    if initial is None:
        start = [max(d.r_off_state for d in data), 10.0, 1e-12]
    else:
        start = [initial.r_off, initial.r_on, initial.c_ds]
    if free_r_loss:
        start.append(fixed.r_loss)
    x0 = np.log(np.array(start, dtype=float))

    rng = np.random.default_rng(seed)
    starts = [x0] + [x0 + rng.normal(0.0, 0.3, n_par) for _ in range(n_restarts)]
    best = None
    total_iter = 0
    for k, xs in enumerate(starts):
        out = minimize(
            obj.cost, xs, method="Nelder-Mead",
            options={"xatol": SIMPLEX_XTOL, "fatol": math.inf, "maxiter": max_iterations,
                     "maxfev": 2 * max_iterations, "initial_simplex": _simplex(xs)},
        )
        total_iter += out.nit
        key = (out.fun, k)
        if best is None or key < best[0]:
            best = (key, out)
    x_best = best[1].x
    converged = bool(best[1].success)
    polish = least_squares(obj.residuals, x_best, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    total_iter += polish.nfev
    if obj.cost(polish.x) <= obj.cost(x_best):
        x_best = polish.x
    # a start that is already optimal is kept, so refitting a result is a no-op
    if obj.cost(x0) <= obj.cost(x_best) * (1.0 + 1e-9):
        x_best = x0
    params = obj.build(x_best)
    if params is None:
        raise FitError("fit ended outside the model domain", best=x_best)
    res = obj.residuals(x_best)
    rms = float(math.sqrt(res @ res / res.size))
    return FitResult(
        hemt=params.hemt,
        residual=rms,
        iterations=total_iter,
        converged=converged,
        r_loss=params.r_loss if free_r_loss else None,
    )


def _simplex(x0, step=0.05):
    pts = [x0]
    for i in range(x0.size):
        p = x0.copy()
        p[i] += step
        pts.append(p)
    return np.array(pts)


def synthetic_measurements(
    params: CircuitParams,
    c_tuning,
    noise: float = 0.0,
    seed: int = 0,
    f_z: float | None = None,
) -> list[SwitchMeasurement]:
    """Switch-model (R, eta) at each ``c_tuning`` with multiplicative Gaussian noise."""
    ct = np.atleast_1d(np.asarray(c_tuning, dtype=float))
    _, r, eta = switch_characteristics(params, ct, f_z)
    rng = np.random.default_rng(seed)
    r = r * (1.0 + noise * rng.standard_normal(ct.size))
    eta = eta * (1.0 + noise * rng.standard_normal(ct.size))
    return [SwitchMeasurement(float(c), float(a), float(b)) for c, a, b in zip(ct, r, eta)]


def scan_ctuning(
    params: CircuitParams,
    grid,
    constraints: DesignConstraints = DesignConstraints(),
    f_z: float | None = None,
) -> ScanResult:
    """Tabulate R and eta over ``grid`` and pick the smallest acceptable c_tuning.

    When nothing qualifies, ``pareto_best`` is the point maximizing the worse
    of R / r_min and eta / eta_min.
    """
    ct = np.asarray(grid, dtype=float).ravel()
    if ct.size == 0:
        raise InvalidParameterError("c_tuning grid is empty")
    if np.any(ct <= 0):
        raise InvalidParameterError("c_tuning values must be > 0")
    ct = np.sort(ct)
    _, r, eta = switch_characteristics(params, ct, f_z)
    meets = (r >= constraints.r_min) & (eta >= constraints.eta_min)
    meets &= eta >= constraints.saturation_fraction * eta.max()
    score = np.minimum(r / constraints.r_min, eta / constraints.eta_min)
    pareto = float(ct[int(np.argmax(score))])
    if np.any(meets):
        return ScanResult(ct, r, eta, meets, float(ct[np.argmax(meets)]), True, pareto)
    return ScanResult(ct, r, eta, meets, None, False, pareto)
