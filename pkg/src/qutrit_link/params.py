"""
Physical parameters, pulse envelopes and regime diagnostics of one link.

Unit convention
---------------
Inside the package every angular frequency is in rad/us and every time in
us.  Published values are quoted as ``2*pi x MHz``; since
``2*pi x 1 MHz = 2*pi x 1 rad/us`` the conversion is a single factor of
``2*pi`` and happens only in :func:`build_params` / :func:`to_mhz`.

The effective Raman coupling of node ``n`` is ``G_n = g * Omega_n / Delta``
and the cavity photon generation rate at the sender is
``alpha_1 = 4 * G_1**2 / k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ProtocolError

TWO_PI = 2.0 * math.pi

# Published parameter set, in units of 2*pi x MHz.
REFERENCE_PARAMS_MHZ = {
    "g": 12.0,
    "k": 3.0,
    "gamma_sp": 5.87,
    "omega1": 7.0,
    "delta_b_f": -12.0,
    "delta_b_fp": 4.0,
    "delta": 100.0,
}

# Sender pulse durations (us) of the three reference runs.
REFERENCE_T1_VALUES = (0.75, 0.22, 0.12)

# Reference populations (beta_-1^2, beta_0^2, beta_1^2) and entropies per T1.
REFERENCE_POPULATIONS = {
    0.75: ((0.00065, 0.0048, 0.995), 0.051),
    0.22: ((0.11, 0.25, 0.64), 1.27),
    0.12: ((0.31, 0.36, 0.33), 1.58),
}

# Factor used for every "much greater than" check, and the factor below which
# a check counts as violated rather than marginal.
STRONG_INEQUALITY = 10.0
MARGINAL_FACTOR = 2.0


@dataclass(frozen=True)
class SystemParams:
    """Rates and detunings of one link, all in rad/us (``phi2`` in rad)."""

    g: float
    k: float
    gamma_sp: float
    omega1: float
    omega2: float
    delta: float
    delta_b_f: float = 0.0
    delta_b_fp: float = 0.0
    phi2: float = math.pi / 2

    def __post_init__(self):
        for name in ("g", "k", "gamma_sp", "omega1", "omega2", "delta",
                     "delta_b_f", "delta_b_fp", "phi2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ProtocolError(f"{name} must be finite, got {value!r}")
        for name in ("g", "k", "gamma_sp"):
            if getattr(self, name) <= 0:
                raise ProtocolError(f"{name} must be strictly positive, got {getattr(self, name)!r}")
        for name in ("omega1", "omega2"):
            if getattr(self, name) < 0:
                raise ProtocolError(f"{name} must be non-negative, got {getattr(self, name)!r}")
        if self.delta == 0:
            raise ProtocolError(
                "delta (one-photon detuning) must be non-zero: the Raman "
                "coupling g*Omega/delta is undefined at resonance"
            )

    def with_receiver_coupling(self, G2: float) -> "SystemParams":
        """Return a copy whose ``omega2`` realises the Raman coupling ``|G2|``."""
        return replace(self, omega2=abs(G2) * abs(self.delta) / self.g)


def build_params(g, k, gamma_sp, omega1, delta, delta_b_f=0.0, delta_b_fp=0.0,
                 omega2=None, phi2=math.pi / 2) -> SystemParams:
    """Build :class:`SystemParams` from rates given in units of 2*pi x MHz.

    ``omega2`` defaults to ``omega1``; ``phi2`` is an angle in radians and is
    not converted.
    """
    if delta == 0:
        raise ProtocolError(
            "delta (one-photon detuning) must be non-zero: the Raman "
            "coupling g*Omega/delta is undefined at resonance"
        )
    if omega2 is None:
        omega2 = omega1
    return SystemParams(
        g=TWO_PI * g,
        k=TWO_PI * k,
        gamma_sp=TWO_PI * gamma_sp,
        omega1=TWO_PI * omega1,
        omega2=TWO_PI * omega2,
        delta=TWO_PI * delta,
        delta_b_f=TWO_PI * delta_b_f,
        delta_b_fp=TWO_PI * delta_b_fp,
        phi2=phi2,
    )


def to_mhz(params: SystemParams) -> dict:
    """Inverse of :func:`build_params`."""
    out = {name: getattr(params, name) / TWO_PI
           for name in ("g", "k", "gamma_sp", "omega1", "omega2", "delta",
                        "delta_b_f", "delta_b_fp")}
    out["phi2"] = params.phi2
    return out


def reference_params(**overrides) -> SystemParams:
    values = dict(REFERENCE_PARAMS_MHZ)
    values.update(overrides)
    return build_params(**values)


def raman_coupling(params: SystemParams, node: int = 1) -> float:
    """Effective Raman atom-photon coupling ``g*Omega/Delta`` of node 1 or 2."""
    if node == 1:
        omega = params.omega1
    elif node == 2:
        omega = params.omega2
    else:
        raise ValueError(f"node must be 1 or 2, got {node!r}")
    return params.g * omega / params.delta


def photon_generation_rate(params: SystemParams) -> float:
    """``alpha_1 = 4 G_1^2 / k`` in 1/us."""
    return 4.0 * raman_coupling(params, 1) ** 2 / params.k


def cooperativity(params: SystemParams) -> float:
    return 4.0 * params.g ** 2 / (params.k * params.gamma_sp)


@dataclass(frozen=True)
class TimeGrid:
    start: float
    end: float
    n_points: int = 2000
    adaptive_tol: float = 1e-10

    def __post_init__(self):
        if not self.start < self.end:
            raise ProtocolError(f"grid start {self.start} must precede end {self.end}")
        if self.n_points < 2:
            raise ProtocolError(f"grid needs at least 2 points, got {self.n_points}")
        if not self.adaptive_tol > 0:
            raise ProtocolError("adaptive_tol must be positive")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.n_points)

    @classmethod
    def around(cls, center: float, width: float, n_widths: float = 5.0,
               n_points: int = 2000) -> "TimeGrid":
        return cls(center - n_widths * width, center + n_widths * width, n_points)

    def union(self, other: "TimeGrid") -> "TimeGrid":
        return TimeGrid(min(self.start, other.start), max(self.end, other.end),
                        max(self.n_points, other.n_points), min(self.adaptive_tol, other.adaptive_tol))


@dataclass(frozen=True)
class PulseProfile:
    """Dimensionless intensity envelope ``f(t)`` with peak value 1.

    The field amplitude follows ``f**0.5``.  Gaussian profiles use
    ``f(t) = exp(-((t - center)/duration)**2)``; tabulated profiles are
    linearly interpolated between samples and undefined outside them.
    """

    shape: str
    duration: float
    center: float = 0.0
    samples: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.shape not in ("gaussian", "tabulated"):
            raise ProtocolError(f"unknown pulse shape {self.shape!r}")
        if not self.duration > 0:
            raise ProtocolError(f"pulse duration must be positive, got {self.duration!r}")
        if self.shape == "tabulated":
            if self.samples is None:
                raise ProtocolError("tabulated profile requires samples")
            ts, fs = (np.asarray(a, dtype=float) for a in self.samples)
            if ts.ndim != 1 or ts.shape != fs.shape or ts.size < 2:
                raise ProtocolError("tabulated samples must be two equal 1-D sequences of length >= 2")
            if np.any(np.diff(ts) <= 0):
                raise ProtocolError("tabulated sample times must be strictly increasing")
            if np.any(fs < 0) or np.any(fs > 1):
                raise ProtocolError("tabulated envelope values must lie in [0, 1]")

    @classmethod
    def gaussian(cls, duration: float, center: float = 0.0) -> "PulseProfile":
        return cls("gaussian", float(duration), float(center))

    @classmethod
    def tabulated(cls, times: Sequence[float], values: Sequence[float],
                  center: Optional[float] = None) -> "PulseProfile":
        ts = tuple(float(x) for x in times)
        fs = tuple(float(x) for x in values)
        if center is None:
            center = ts[int(np.argmax(fs))]
        duration = 0.5 * (ts[-1] - ts[0])
        return cls("tabulated", duration, float(center), (ts, fs))

    def shifted(self, center: float) -> "PulseProfile":
        """Same shape moved so that its reference time is ``center``."""
        if self.shape == "gaussian":
            return replace(self, center=float(center))
        offset = center - self.center
        ts, fs = self.samples
        return replace(self, center=float(center),
                       samples=(tuple(t + offset for t in ts), fs))

    def support(self) -> Tuple[float, float]:
        """Interval outside which the amplitude ``f**0.5`` is below ~1e-14."""
        if self.shape == "gaussian":
            return self.center - 8.0 * self.duration, self.center + 8.0 * self.duration
        ts = self.samples[0]
        return ts[0], ts[-1]

    def envelope(self, t, *, zero_outside: bool = False):
        t = np.asarray(t, dtype=float)
        if self.shape == "gaussian":
            out = np.exp(-(((t - self.center) / self.duration) ** 2))
        else:
            ts, fs = (np.asarray(a) for a in self.samples)
            if not zero_outside and (np.any(t < ts[0]) or np.any(t > ts[-1])):
                raise ProtocolError(
                    f"time outside tabulated range [{ts[0]}, {ts[-1]}]"
                )
            out = np.interp(t, ts, fs, left=0.0, right=0.0)
        return out if out.ndim else float(out)

    def amplitude(self, t, *, zero_outside: bool = True):
        """Field envelope ``f(t)**0.5``."""
        return np.sqrt(self.envelope(t, zero_outside=zero_outside))


def envelope_eval(profile: PulseProfile, t):
    return profile.envelope(t)


@dataclass(frozen=True)
class Check:
    """One inequality ``left >> right`` (or ``left > right``) and its margin."""

    name: str
    left: float
    right: float
    ratio: float
    threshold: float
    marginal_threshold: float

    @property
    def passed(self) -> bool:
        return self.ratio >= self.threshold

    @property
    def status(self) -> str:
        if self.passed:
            return "pass"
        if self.ratio >= self.marginal_threshold:
            return "marginal"
        return "violated"

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "left": self.left,
            "right": self.right,
            "ratio": self.ratio,
            "threshold": self.threshold,
            "passed": self.passed,
            "status": self.status,
        }


@dataclass(frozen=True)
class DiagnosticsReport:
    checks: Tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def violated(self) -> bool:
        return any(c.status == "violated" for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _ratio(left: float, right: float) -> float:
    if right == 0:
        return math.inf
    return left / right


def validate_regime(params: SystemParams, profile: PulseProfile,
                    grid: Optional[TimeGrid] = None) -> DiagnosticsReport:
    """Check the operating regime of the sender against the model's assumptions.

    Failures are reported, never raised.  Each check stores the two compared
    quantities with the larger-is-better side first, so ``ratio >= threshold``
    means pass.
    """
    if grid is None:
        grid = TimeGrid.around(profile.center, profile.duration)
    strong, weak = STRONG_INEQUALITY, MARGINAL_FACTOR
    checks = []

    G1 = abs(raman_coupling(params, 1))
    # Photons must leave the cavity before Raman reabsorption: strict inequality.
    checks.append(Check("raman_slower_than_leakage", params.k, G1, _ratio(params.k, G1), 1.0, 1.0))

    cc = cooperativity(params)
    checks.append(Check("cooperativity", cc, 1.0, cc, strong, weak))

    scale = max(params.k, params.gamma_sp, params.omega1,
                abs(params.delta_b_f), abs(params.delta_b_fp))
    checks.append(Check("detuning_hierarchy", abs(params.delta), scale,
                        _ratio(abs(params.delta), scale), strong, weak))

    kt = params.k * profile.duration
    checks.append(Check("adiabatic_limit", kt, 1.0, kt, strong, weak))

    t = grid.times
    f = profile.envelope(t, zero_outside=True)
    amp = np.sqrt(f)
    if profile.shape == "gaussian":
        slope = np.abs((t - profile.center) / profile.duration ** 2 * amp)
    else:
        slope = np.abs(np.gradient(amp, t))
    mask = f > 1e-6
    if np.any(mask):
        lhs = abs(params.delta) * amp[mask]
        rhs = slope[mask]
        with np.errstate(divide="ignore"):
            ratios = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.inf)
        i = int(np.argmin(ratios))
        checks.append(Check("slow_variation", float(lhs[i]), float(rhs[i]),
                            float(ratios[i]), strong, weak))
    else:
        checks.append(Check("slow_variation", 0.0, 0.0, math.inf, strong, weak))
    return DiagnosticsReport(tuple(checks))
