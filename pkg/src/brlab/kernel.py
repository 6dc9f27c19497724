"""Radial kernels of the annular pieces and their far-zone decay.

The kernel of a radial multiplier ``m(|xi|)`` is the Hankel-type integral

    tau(u) = 2 pi int_0^inf m(s) J0(2 pi u s) s ds,

evaluated here by adaptive Gauss-Legendre quadrature on panels no wider
than ``1/(16 u)``.  Derivatives needed by the integration-by-parts operator
``M^-1 D M D chi = chi'' + chi'/s`` are computed exactly (to rounding) by
truncated Taylor arithmetic on the fixed bump, so no finite-difference step
enters the identity checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .field import SampledField
from .symbol import SymbolSpec, symbol_grid

__all__ = [
    "Jet",
    "bessel",
    "bessel_j0",
    "bessel_j1",
    "QuadratureError",
    "gauss_legendre",
    "Profile",
    "bump_profile",
    "psi_profile",
    "symbol_profile",
    "ibp_operator",
    "ibp_operator_fd",
    "RadialProfile",
    "radial_kernel",
    "grid_kernel",
    "grid_radial",
    "DecayCertificate",
    "decay_certificate",
    "envelope_slope",
]


# ---------------------------------------------------------------- Taylor jets

class Jet:
    """Truncated Taylor expansion ``sum_k c[k] eps**k`` at an array of base points.

    ``c`` has shape ``(order + 1, *points)``.  Derivatives are
    ``f^(k)(s0) = k! c[k]``.
    """

    __array_priority__ = 1000

    def __init__(self, c):
        self.c = np.asarray(c, dtype=float)

    @classmethod
    def variable(cls, s0, order: int) -> "Jet":
        s0 = np.asarray(s0, dtype=float)
        c = np.zeros((order + 1,) + s0.shape)
        c[0] = s0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, v, order: int, shape) -> "Jet":
        c = np.zeros((order + 1,) + tuple(shape))
        c[0] = v
        return cls(c)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def derivative(self, k: int) -> np.ndarray:
        return math.factorial(k) * self.c[k]

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order, self.c.shape[1:])

    def __add__(self, other):
        o = self._coerce(other)
        return Jet(self.c + o.c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b = self.c, other.c
        K = min(a.shape[0], b.shape[0])
        out = np.zeros((K,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]))
        for k in range(K):
            for m in range(k + 1):
                out[k] += a[m] * b[k - m]
        return Jet(out)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a = self.c
        r = np.zeros_like(a)
        r[0] = 1.0 / a[0]
        for k in range(1, a.shape[0]):
            acc = np.zeros_like(a[0])
            for m in range(1, k + 1):
                acc += a[m] * r[k - m]
            r[k] = -acc * r[0]
        return Jet(r)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def exp(self) -> "Jet":
        a = self.c
        e = np.zeros_like(a)
        e[0] = np.exp(a[0])
        for k in range(1, a.shape[0]):
            acc = np.zeros_like(a[0])
            for m in range(1, k + 1):
                acc += m * a[m] * e[k - m]
            e[k] = acc / k
        return Jet(e)

    def log(self) -> "Jet":
        a = self.c
        out = np.zeros_like(a)
        out[0] = np.log(a[0])
        for k in range(1, a.shape[0]):
            acc = np.zeros_like(a[0])
            for m in range(1, k):
                acc += m * out[m] * a[k - m]
            out[k] = (a[k] - acc / k) / a[0]
        return Jet(out)

    def __pow__(self, lam: float):
        return (self.log() * lam).exp()

    def D(self) -> "Jet":
        """Derivative jet (one order lower)."""
        k = np.arange(1, self.c.shape[0]).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[1:] * k)

    def truncate(self, order: int) -> "Jet":
        return Jet(self.c[: order + 1])

    def where(self, mask) -> "Jet":
        """Zero the jet outside ``mask`` (used for the piecewise bump)."""
        return Jet(np.where(mask, self.c, 0.0))


def _theta_jet(t: Jet) -> Jet:
    m = t.value > 1.0 / 700.0
    safe = Jet(np.where(m, t.c, 1.0))
    safe.c[0] = np.where(m, t.value, 1.0)
    out = (-(1.0 / safe)).exp()
    return out.where(m)


def _step_jet(t: Jet) -> Jet:
    a = _theta_jet(t)
    b = _theta_jet(1.0 - t)
    return a / (a + b)


def phi_jet(x: Jet) -> Jet:
    """Jet of the even bump ``phi`` (the ``|x|`` kink sits where phi is flat)."""
    sign = np.where(x.value < 0, -1.0, 1.0)
    return _step_jet(2.0 - x * sign)


def psi_jet(x: Jet) -> Jet:
    return phi_jet(x) - phi_jet(x * 2.0)


# ---------------------------------------------------------------- Bessel

_SERIES_CUT = 12.0
_SERIES_TERMS = 48
_ASYM_TERMS = 24


def _series(x, nu):
    y = -0.25 * x * x
    term = np.ones_like(x) if nu == 0 else 0.5 * x
    total = term.copy()
    for k in range(1, _SERIES_TERMS):
        term = term * y / (k * (k + nu))
        total = total + term
    return total


def _asymptotic(x, nu):
    mu = 4.0 * nu * nu
    P = np.ones_like(x)
    Q = np.zeros_like(x)
    a = 1.0
    inv8x = 1.0 / (8.0 * x)
    t = np.ones_like(x)
    for k in range(1, _ASYM_TERMS):
        a = a * (mu - (2 * k - 1) ** 2) / k
        t = t * inv8x
        v = a * t
        if k % 2 == 1:
            Q = Q + (v if (k // 2) % 2 == 0 else -v)
        else:
            P = P + (-v if (k // 2) % 2 == 1 else v)
    chi = x - (0.5 * nu + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (P * np.cos(chi) - Q * np.sin(chi))


def bessel(order: int, x):
    """``J_0`` or ``J_1`` for ``x >= 0``: power series up to 12, Hankel asymptotics beyond."""
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are provided")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel expects x >= 0")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    small = x <= _SERIES_CUT
    if small.any():
        out[small] = _series(x[small], order)
    if (~small).any():
        out[~small] = _asymptotic(x[~small], order)
    return float(out[0]) if scalar else out


def bessel_j0(x):
    return bessel(0, x)


def bessel_j1(x):
    return bessel(1, x)


# ---------------------------------------------------------------- quadrature

class QuadratureError(RuntimeError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


_GL = {n: leggauss(n) for n in (10, 20)}


def gauss_legendre(func: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                   panel_width: float | None = None, tol: float = 1e-10,
                   max_panels: int = 2**20) -> tuple[float, dict]:
    """Adaptive composite Gauss-Legendre on ``[a, b]``.

    Panels start no wider than ``panel_width``; each panel compares the
    10- and 20-point rules and is bisected until the estimated error is
    below ``tol`` times the running absolute integral (with an absolute
    floor of ``tol * 1e-6``).  Returns ``(value, diagnostics)``.
    """
    if b <= a:
        return 0.0, {"panels": 0}
    n0 = 1 if panel_width is None else max(1, math.ceil((b - a) / panel_width))
    edges = np.linspace(a, b, n0 + 1)
    lo, hi = edges[:-1], edges[1:]
    x10, w10 = _GL[10]
    x20, w20 = _GL[20]
    done = []
    abs_scale = 0.0
    rounds = 0
    total_panels = lo.size
    while lo.size:
        c = 0.5 * (lo + hi)
        r = 0.5 * (hi - lo)
        f10 = func((c[:, None] + r[:, None] * x10[None, :]).ravel()).reshape(lo.size, -1)
        f20 = func((c[:, None] + r[:, None] * x20[None, :]).ravel()).reshape(lo.size, -1)
        i10 = r * (f10 @ w10)
        i20 = r * (f20 @ w20)
        abs_scale = max(abs_scale, float(np.sum(np.abs(r[:, None] * np.abs(f20)) @ w20)))
        err = np.abs(i20 - i10)
        thresh = tol * max(abs_scale, 1e-6) / max(1, lo.size) ** 0.5
        ok = err <= thresh
        done.append(i20[ok])
        bad_lo, bad_hi = lo[~ok], hi[~ok]
        mid = 0.5 * (bad_lo + bad_hi)
        lo = np.concatenate([bad_lo, mid])
        hi = np.concatenate([mid, bad_hi])
        total_panels += lo.size
        rounds += 1
        if total_panels > max_panels:
            raise QuadratureError(
                f"quadrature on [{a:g}, {b:g}] exceeded {max_panels} panels",
                {"rounds": rounds, "panels": total_panels, "unresolved": int(lo.size),
                 "max_error": float(err.max())},
            )
    vals = np.concatenate(done) if done else np.zeros(0)
    return math.fsum(vals), {"panels": total_panels, "rounds": rounds}


# ---------------------------------------------------------------- profiles

@dataclass(frozen=True)
class Profile:
    """Smooth radial profile ``chi(s)`` with known support ``[a, b]``.

    ``jet`` maps a :class:`Jet` in ``s`` to the jet of ``chi``; profiles
    without one fall back to finite differences.
    """

    func: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    jet: Callable[[Jet], Jet] | None = None
    name: str = "chi"

    def __call__(self, s):
        return self.func(np.asarray(s, dtype=float))


def _jet_to_func(jf: Callable[[Jet], Jet]):
    return lambda s: jf(Jet.variable(s, 0)).value


def bump_profile(center: float = 1.0, half_width: float = 0.5) -> Profile:
    """``phi(2 (s - c)/w)``: a bump at ``c`` supported in ``|s - c| <= w``."""
    jf = lambda S: phi_jet((S - center) * (2.0 / half_width))
    return Profile(_jet_to_func(jf), (center - half_width, center + half_width), jf,
                   f"bump({center:g},{half_width:g})")


def psi_profile(j: int, chi_scale: float = 1.0) -> Profile:
    """``psi(2**j (1 - s))``, supported in ``1 - 2**(1-j) <= s <= 1 - 2**(-j-1)``."""
    jf = lambda S: psi_jet((1.0 - S) * 2.0**j)
    return Profile(_jet_to_func(jf), (1.0 - 2.0 ** (1 - j), 1.0 - 2.0 ** (-j - 1)), jf, f"psi_{j}")


def symbol_profile(lam: float, j: int) -> Profile:
    """The radial annular symbol ``2**(lam j) (1 - s**2)**lam psi(2**j (1 - s))``."""
    def jf(S: Jet) -> Jet:
        base = 1.0 - S * S
        core = psi_jet((1.0 - S) * 2.0**j)
        ok = (base.value > 0) & (np.abs(core.value) > 0)
        safe = Jet(np.where(ok, base.c, 0.0))
        safe.c[0] = np.where(ok, base.value, 1.0)
        return ((safe**lam) * core * 2.0 ** (lam * j)).where(ok)

    a, b = 1.0 - 2.0 ** (1 - j), 1.0 - 2.0 ** (-j - 1)
    return Profile(_jet_to_func(jf), (max(a, 0.0), b), jf, f"symbol_{j}(lam={lam:g})")


def ibp_operator(chi: Profile, order: int) -> Profile:
    """``[M^-1 D M D]**order chi`` with ``M`` multiplication by ``s``.

    Exact Taylor arithmetic when ``chi`` carries a jet, otherwise fourth-order
    central differences (see :func:`ibp_operator_fd`).
    """
    a, b = chi.support
    if a <= 0:
        raise ValueError("support touches s = 0, where M^-1 is singular")
    if order < 0:
        raise ValueError("order must be >= 0")
    if chi.jet is None:
        return ibp_operator_fd(chi, order)

    def jf(S: Jet) -> Jet:
        K = S.order
        s0 = S.value
        X = Jet.variable(s0, K + 2 * order)
        J = chi.jet(X)
        for _ in range(order):
            Sv = Jet.variable(s0, J.order - 1)
            J = (Sv * J.D()).D() / Sv.truncate(J.order - 2)
        # exact zero off the support (the jets there carry rounding noise)
        return J.truncate(K).where((s0 > a) & (s0 < b))

    return Profile(_jet_to_func(jf), chi.support, jf, f"L^{order}[{chi.name}]")


def ibp_operator_fd(chi: Profile, order: int, step: float | None = None) -> Profile:
    """Finite-difference realisation of ``[M^-1 D M D]**order`` (4th-order stencils)."""
    a, b = chi.support
    if a <= 0:
        raise ValueError("support touches s = 0, where M^-1 is singular")
    h = step if step is not None else (b - a) / 64.0

    def apply_once(g):
        def out(s):
            s = np.asarray(s, dtype=float)
            f = [g(s + k * h) for k in (-2, -1, 0, 1, 2)]
            d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
            d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
            return d2 + d1 / s
        return out

    g = chi.func
    for _ in range(order):
        g = apply_once(g)
    inside = lambda s: np.where((np.asarray(s) >= a) & (np.asarray(s) <= b), g(s), 0.0)
    return Profile(inside, chi.support, None, f"Lfd^{order}[{chi.name}]")


# ---------------------------------------------------------------- kernels

@dataclass
class RadialProfile:
    j: int
    lam: float
    u: np.ndarray
    values: np.ndarray
    diagnostics: list = field(default_factory=list)


def _radial_integral(m: Callable, a: float, b: float, u: float, tol: float, max_panels: int):
    w = 2.0 * math.pi * u
    f = lambda s: m(s) * bessel_j0(w * s) * s
    width = (b - a) if u == 0 else min(b - a, 1.0 / (16.0 * u))
    val, info = gauss_legendre(f, a, b, panel_width=width, tol=tol, max_panels=max_panels)
    return 2.0 * math.pi * val, info


def radial_kernel(spec: SymbolSpec, u, tol: float = 1e-10, max_panels: int = 2**20) -> RadialProfile:
    """``tau_j(u) = 2 pi int m_j(s) J0(2 pi u s) s ds`` for an annular spec."""
    if spec.piece != "annular":
        raise ValueError("radial_kernel expects an annular piece")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u < 0):
        raise ValueError("radii must be >= 0")
    j = spec.j
    prof = symbol_profile(spec.lam, j)
    a, b = prof.support
    vals = np.empty_like(u)
    diags = []
    for i, ui in enumerate(u):
        vals[i], info = _radial_integral(prof.func, a, b, ui, tol, max_panels)
        diags.append(info)
    return RadialProfile(j, spec.lam, u, vals, diags)


def grid_kernel(spec: SymbolSpec, N: int, L: float) -> SampledField:
    """Periodised kernel on the grid, centred at the origin sample ``(N/2, N/2)``.

    Inverse DFT of the sampled symbol; by Poisson summation this is the
    continuum kernel summed over translates by ``L Z^2``.
    """
    m = symbol_grid(spec, N, L)
    h = L / N
    tau = np.fft.fftshift(np.fft.ifft2(m)) / (h * h)
    return SampledField(tau, L)


def grid_radial(spec: SymbolSpec, N: int, L: float) -> tuple[np.ndarray, np.ndarray]:
    """Kernel read along the positive ``x1`` axis: ``(u, tau(u, 0))`` for ``u = n h``."""
    K = grid_kernel(spec, N, L)
    c = N // 2
    u = (L / N) * np.arange(N // 2)
    return u, K.data[c:, c].copy()


# ---------------------------------------------------------------- decay

def envelope_slope(u: np.ndarray, values: np.ndarray) -> float:
    """Least-squares log-log slope of the decreasing upper envelope of ``|values|``.

    The envelope at ``u`` is ``max |values(u')|`` over sampled ``u' >= u``,
    which removes the zeros of the oscillating kernel.
    """
    a = np.abs(np.asarray(values))
    env = np.maximum.accumulate(a[::-1])[::-1]
    keep = env > 0
    return float(np.polyfit(np.log(u[keep]), np.log(env[keep]), 1)[0])


@dataclass
class DecayCertificate:
    j: int
    N: int
    lam: float
    C_N: float
    slope: float
    u: np.ndarray
    tau: np.ndarray

    def to_dict(self) -> dict:
        return {"j": self.j, "N": self.N, "lambda": self.lam, "C_N": self.C_N,
                "slope": self.slope, "slope_bound": -2 * self.N + 0.3}


def decay_certificate(j: int, N: int, lam: float = 0.25, samples: int = 400,
                      profile: RadialProfile | None = None) -> DecayCertificate:
    """Measure ``sup |tau_j(u)| (2**-j u)**(2N) 2**(3j/2)`` over ``u`` in ``[2**j, 2**(j+4)]``.

    Also reports the envelope slope of ``|tau_j|`` on ``[2**(j+1), 2**(j+4)]``.
    A precomputed ``profile`` on log-spaced radii can be passed to share the
    quadrature across several ``N``.
    """
    if j < 1 or N < 1:
        raise ValueError("need j >= 1 and N >= 1")
    if profile is None:
        u = np.geomspace(2.0**j, 2.0 ** (j + 4), samples)
        profile = radial_kernel(SymbolSpec(lam, "annular", j), u)
    u, tau = profile.u, profile.values
    weight = (u * 2.0**-j) ** (2 * N) * 2.0 ** (1.5 * j)
    C = float(np.max(np.abs(tau) * weight))
    far = u >= 2.0 ** (j + 1) * (1 - 1e-12)
    slope = envelope_slope(u[far], tau[far])
    return DecayCertificate(j, N, profile.lam, C, slope, u, tau)
